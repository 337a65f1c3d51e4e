#include "oce/pipeline/config_io.hpp"

#include <cmath>

namespace oce::pipeline {

namespace {

std::size_t get_count(const KeyValueConfig &kv, const std::string &key, std::size_t fallback) {
    const std::int64_t v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

std::vector<std::size_t> get_counts(const KeyValueConfig &kv, const std::string &key,
                                    const std::vector<std::size_t> &fallback) {
    if (!kv.has(key)) return fallback;
    std::vector<std::size_t> out;
    for (double d : kv.get_list(key, {})) {
        if (d < 0.0 || d != std::floor(d)) throw ConfigError("config key '" + key + "' expects non-negative integers");
        out.push_back(static_cast<std::size_t>(d));
    }
    return out;
}

} // namespace

const std::set<std::string> &known_config_keys() {
    static const std::set<std::string> keys{
        "scene.rows", "scene.cols", "scene.scatterers", "scene.reflectivity_min", "scene.reflectivity_max",
        "scene.psf_sigma_axial", "scene.psf_sigma_lateral", "scene.focus_row", "scene.defocus_rate", "scene.margin",
        "scene.pitch_axial", "scene.pitch_lateral", "scene.seed",
        "motion.kind", "motion.frames", "motion.step_px", "motion.compression_peak", "motion.center_col",
        "motion.width_px", "motion.seed",
        "noise.model", "noise.sigma", "noise.seed",
        "spectral.enabled", "spectral.n_k", "spectral.k_min", "spectral.k_max",
        "recon.mode", "recon.suppress_negative_delay", "recon.guard_rows", "recon.focus_row", "recon.oversampling",
        "recon.kernel_width", "recon.kernel_beta", "recon.floor_db",
        "flow.windows", "flow.overlaps", "flow.margins", "flow.peak_fit", "flow.min_ncc", "flow.outlier_radius",
        "flow.outlier_tol",
        "denoise.block", "denoise.full_temporal", "denoise.search", "denoise.group", "denoise.step",
        "denoise.lambda", "denoise.sigma", "denoise.wiener",
        "pipeline.iterations", "pipeline.reference", "pipeline.unwarp", "pipeline.metric_margin"};
    return keys;
}

flow::PeakFit parse_peak_fit(const std::string &s) {
    if (s == "gauss2d") return flow::PeakFit::gauss2d;
    if (s == "gauss1x1d") return flow::PeakFit::gauss1x1d;
    if (s == "parabolic") return flow::PeakFit::parabolic;
    throw ConfigError("unknown peak fit '" + s + "' (gauss2d, gauss1x1d, parabolic)");
}

std::string to_string(flow::PeakFit f) {
    switch (f) {
    case flow::PeakFit::gauss2d: return "gauss2d";
    case flow::PeakFit::gauss1x1d: return "gauss1x1d";
    case flow::PeakFit::parabolic: return "parabolic";
    }
    return "?";
}

SimulationConfig simulation_config_from(const KeyValueConfig &kv) {
    kv.require_known(known_config_keys());
    SimulationConfig s;
    auto &sc = s.scene;
    sc.rows = get_count(kv, "scene.rows", sc.rows);
    sc.cols = get_count(kv, "scene.cols", sc.cols);
    sc.n_scatterers = get_count(kv, "scene.scatterers", sc.n_scatterers);
    sc.reflectivity_min = kv.get_double("scene.reflectivity_min", sc.reflectivity_min);
    sc.reflectivity_max = kv.get_double("scene.reflectivity_max", sc.reflectivity_max);
    sc.psf_sigma_axial = kv.get_double("scene.psf_sigma_axial", sc.psf_sigma_axial);
    sc.psf_sigma_lateral = kv.get_double("scene.psf_sigma_lateral", sc.psf_sigma_lateral);
    sc.focus_row = get_count(kv, "scene.focus_row", sc.rows / 2);
    if (kv.get_string("scene.defocus_rate", "") == "auto") {
        s.defocus_auto = true;
    } else {
        sc.defocus_rate = kv.get_double("scene.defocus_rate", sc.defocus_rate);
    }
    sc.margin = kv.get_double("scene.margin", sc.margin);
    sc.pitch_axial = kv.get_double("scene.pitch_axial", sc.pitch_axial);
    sc.pitch_lateral = kv.get_double("scene.pitch_lateral", sc.pitch_lateral);
    sc.seed = static_cast<std::uint64_t>(kv.get_int("scene.seed", static_cast<std::int64_t>(sc.seed)));

    auto &m = s.motion;
    const std::string kind = kv.get_string("motion.kind", "uniform_lateral");
    if (kind == "uniform_lateral") {
        m.kind = phantom::MotionKind::uniform_lateral;
    } else if (kind == "smooth_compression") {
        m.kind = phantom::MotionKind::smooth_compression;
    } else {
        throw ConfigError("unknown motion.kind '" + kind + "'");
    }
    m.n_frames = get_count(kv, "motion.frames", m.n_frames);
    m.step_px = kv.get_double("motion.step_px", m.step_px);
    m.compression_peak = kv.get_double("motion.compression_peak", m.compression_peak);
    m.center_col = kv.get_double("motion.center_col", m.center_col);
    m.width_px = kv.get_double("motion.width_px", m.width_px);
    m.seed = static_cast<std::uint64_t>(kv.get_int("motion.seed", static_cast<std::int64_t>(m.seed)));

    if (kv.get_string("noise.model", "additive_gaussian_complex") != "additive_gaussian_complex") {
        throw ConfigError("unknown noise.model (only additive_gaussian_complex)");
    }
    s.noise.sigma = kv.get_double("noise.sigma", s.noise.sigma);
    s.noise.seed = static_cast<std::uint64_t>(kv.get_int("noise.seed", static_cast<std::int64_t>(s.noise.seed)));

    s.write_spectra = kv.get_bool("spectral.enabled", s.write_spectra);
    s.n_k = get_count(kv, "spectral.n_k", s.n_k);
    s.k_min = kv.get_double("spectral.k_min", s.k_min);
    s.k_max = kv.get_double("spectral.k_max", s.k_max);

    sc.validate();
    m.validate();
    s.noise.validate();
    if (s.spectral_samples() < 2 * sc.rows) throw ConfigError("spectral.n_k must be at least 2 * scene.rows");
    if (!(s.k_min > 0.0) || !(s.k_max > s.k_min)) throw ConfigError("spectral k range must satisfy 0 < k_min < k_max");
    if (s.defocus_auto) {
        sc.defocus_rate = phantom::defocus_rate_for(s.spectral_samples(), s.k_min, s.k_max, sc.pitch_lateral);
    }
    return s;
}

PipelineConfig pipeline_config_from(const KeyValueConfig &kv) {
    kv.require_known(known_config_keys());
    PipelineConfig c;

    auto &r = c.recon;
    const std::string mode = kv.get_string("recon.mode", "ifft");
    if (mode == "ifft") {
        r.mode = Preprocess::ifft;
    } else if (mode == "isam") {
        r.mode = Preprocess::isam;
    } else {
        throw ConfigError("unknown recon.mode '" + mode + "' (ifft, isam)");
    }
    r.suppress_negative_delay = kv.get_bool("recon.suppress_negative_delay", r.suppress_negative_delay);
    r.guard_rows = get_count(kv, "recon.guard_rows", r.guard_rows);
    if (kv.has("recon.focus_row")) r.focus_row = get_count(kv, "recon.focus_row", 0);
    r.nufft_oversampling = kv.get_double("recon.oversampling", r.nufft_oversampling);
    r.kernel_width = static_cast<int>(kv.get_int("recon.kernel_width", r.kernel_width));
    r.kernel_beta = kv.get_double("recon.kernel_beta", r.kernel_beta);
    r.floor_db = kv.get_double("recon.floor_db", r.floor_db);

    auto &f = c.flow;
    std::vector<std::size_t> windows, overlaps, margins;
    for (const auto &p : f.passes) {
        windows.push_back(p.window);
        overlaps.push_back(p.overlap);
        margins.push_back(p.search_margin);
    }
    windows = get_counts(kv, "flow.windows", windows);
    overlaps = get_counts(kv, "flow.overlaps", overlaps);
    margins = get_counts(kv, "flow.margins", margins);
    if (windows.size() != overlaps.size() || windows.size() != margins.size()) {
        throw ConfigError("flow.windows, flow.overlaps and flow.margins must have the same length");
    }
    f.passes.clear();
    for (std::size_t i = 0; i < windows.size(); ++i) f.passes.push_back({windows[i], overlaps[i], margins[i]});
    f.peak_fit = parse_peak_fit(kv.get_string("flow.peak_fit", to_string(f.peak_fit)));
    f.min_ncc = kv.get_double("flow.min_ncc", f.min_ncc);
    f.outlier_median_radius = get_count(kv, "flow.outlier_radius", f.outlier_median_radius);
    f.outlier_tol = kv.get_double("flow.outlier_tol", f.outlier_tol);

    auto &d = c.denoise;
    d.block = get_count(kv, "denoise.block", d.block);
    d.use_full_temporal = kv.get_bool("denoise.full_temporal", d.use_full_temporal);
    d.search_window = get_count(kv, "denoise.search", d.search_window);
    d.max_group = get_count(kv, "denoise.group", d.max_group);
    d.step = get_count(kv, "denoise.step", d.step);
    d.hard_lambda = kv.get_double("denoise.lambda", d.hard_lambda);
    const std::string sigma = kv.get_string("denoise.sigma", "auto");
    d.sigma = sigma == "auto" ? -1.0 : kv.get_double("denoise.sigma", 0.0);
    if (sigma != "auto" && d.sigma < 0.0) throw ConfigError("denoise.sigma must be 'auto' or non-negative");
    d.wiener_stage = kv.get_bool("denoise.wiener", d.wiener_stage);

    c.iterations = get_count(kv, "pipeline.iterations", c.iterations);
    const std::string unwarp = kv.get_string("pipeline.unwarp", "normalized_adjoint");
    if (unwarp == "adjoint") {
        c.unwarp = Unwarp::adjoint;
    } else if (unwarp == "normalized_adjoint") {
        c.unwarp = Unwarp::normalized_adjoint;
    } else {
        throw ConfigError("unknown pipeline.unwarp '" + unwarp + "' (adjoint, normalized_adjoint)");
    }
    const std::string ref = kv.get_string("pipeline.reference", "auto");
    if (ref != "auto") c.reference_index = get_count(kv, "pipeline.reference", 0);
    c.metric_margin = get_count(kv, "pipeline.metric_margin", c.metric_margin);

    c.validate();
    return c;
}

} // namespace oce::pipeline
