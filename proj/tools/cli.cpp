#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oce/core/config.hpp"
#include "oce/core/parallel.hpp"
#include "oce/core/pgm.hpp"
#include "oce/core/raster_io.hpp"
#include "oce/pipeline/config_io.hpp"
#include "oce/pipeline/metrics.hpp"
#include "oce/pipeline/pipeline.hpp"
#include "oce/pipeline/simulate.hpp"

namespace oce::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

struct ConfigArgs {
    std::string path;
    std::vector<std::string> sets;
};

void add_config_args(CLI::App *cmd, ConfigArgs &c) {
    cmd->add_option("--config", c.path, "key=value config file");
    cmd->add_option("--set", c.sets, "override a config entry, e.g. --set flow.min_ncc=0.4")->take_all();
}

KeyValueConfig load_config(const ConfigArgs &c, const Globals &g) {
    KeyValueConfig kv = c.path.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.path);
    for (const std::string &s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (g.seed) {
        kv.set("scene.seed", std::to_string(*g.seed));
        kv.set("noise.seed", std::to_string(*g.seed + 1));
        kv.set("motion.seed", std::to_string(*g.seed + 2));
    }
    kv.require_known(pipeline::known_config_keys());
    return kv;
}

std::vector<Image> read_images(const std::string &path) {
    std::vector<Image> out;
    for (const RasterArray &a : split_frames(read_raster(path))) out.push_back(image_from_raster(a));
    return out;
}

Image read_single_image(const std::string &path) {
    auto imgs = read_images(path);
    if (imgs.size() != 1) throw ShapeError(path + ": expected one image, found a stack of " + std::to_string(imgs.size()));
    return std::move(imgs.front());
}

std::vector<Mask> read_masks(const std::string &path) {
    std::vector<Mask> out;
    for (const RasterArray &a : split_frames(read_raster(path))) out.push_back(mask_from_raster(a));
    return out;
}

void write_images(const std::vector<Image> &imgs, const fs::path &path) {
    std::vector<RasterArray> slices;
    for (const Image &img : imgs) slices.push_back(to_raster(img));
    write_raster(stack_frames(slices), path);
}

void write_complex(const std::vector<ComplexImage> &imgs, const fs::path &path) {
    std::vector<RasterArray> slices;
    for (const ComplexImage &img : imgs) slices.push_back(to_raster(img));
    write_raster(stack_frames(slices), path);
}

struct SpectralGeometry {
    double k_min, k_max, pitch_lateral;
};

SpectralGeometry spectral_geometry(const KeyValueConfig &kv) {
    const pipeline::SimulationConfig defaults;
    return {kv.get_double("spectral.k_min", defaults.k_min), kv.get_double("spectral.k_max", defaults.k_max),
            kv.get_double("scene.pitch_lateral", defaults.scene.pitch_lateral)};
}

std::vector<SpectralFrame> read_spectra(const std::vector<RasterArray> &slices, const SpectralGeometry &g) {
    std::vector<SpectralFrame> out;
    for (const RasterArray &a : slices) out.push_back(spectral_from_raster(a, g.k_min, g.k_max, g.pitch_lateral));
    return out;
}

std::string field_prefix(const fs::path &dir, const std::string &tag, std::size_t i) {
    return (dir / (tag + "_" + std::to_string(i))).string();
}

// Reference image dimmed to half intensity with displacement arrows every
// `spacing` pixels, scaled so the longest arrow spans most of one cell.
Image quiver_preview(const Image &ref, const DisplacementField &f, std::size_t spacing) {
    Image out(ref.geometry());
    for (std::size_t i = 0; i < ref.size(); ++i) out[i] = 0.5 * std::clamp(ref[i], 0.0, 1.0);
    double longest = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.valid[i]) longest = std::max(longest, std::hypot(f.axial[i], f.lateral[i]));
    const double scale = longest > 0.0 ? 0.9 * static_cast<double>(spacing) / longest : 0.0;
    for (std::size_t r = spacing / 2; r < f.rows; r += spacing) {
        for (std::size_t c = spacing / 2; c < f.cols; c += spacing) {
            const std::size_t p = f.index(r, c);
            if (!f.valid[p]) continue;
            const double dr = scale * f.axial[p], dc = scale * f.lateral[p];
            const int steps = static_cast<int>(std::ceil(std::max(std::abs(dr), std::abs(dc)))) + 1;
            for (int s = 0; s <= steps; ++s) {
                const double a = static_cast<double>(s) / steps;
                const long rr = std::lround(static_cast<double>(r) + a * dr);
                const long cc = std::lround(static_cast<double>(c) + a * dc);
                if (rr < 0 || cc < 0 || rr >= static_cast<long>(f.rows) || cc >= static_cast<long>(f.cols)) continue;
                out(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) = 1.0;
            }
        }
    }
    return out;
}

void write_metric_rows(const std::vector<pipeline::MetricRow> &rows, const std::string &path, std::ostream &out) {
    if (path.empty() || path == "-") {
        pipeline::write_metrics_csv(rows, out);
        return;
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    pipeline::write_metrics_csv(rows, f);
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    ConfigArgs config;
    std::string out_dir;
    bool previews = false;
};

void do_simulate(const SimulateArgs &a, const Globals &g, std::ostream &err) {
    const KeyValueConfig kv = load_config(a.config, g);
    const pipeline::SimulationConfig sc = pipeline::simulation_config_from(kv);
    const double floor_db = kv.get_double("recon.floor_db", kDefaultFloorDb);
    const pipeline::SimulationOutput sim = pipeline::simulate(sc, floor_db);

    const fs::path dir(a.out_dir);
    fs::create_directories(dir / "truth");
    write_images(sim.noisy.frames, dir / "frames.ocer");
    write_images(sim.clean.frames, dir / "clean.ocer");
    for (std::size_t i = 0; i < sim.pairwise.size(); ++i) write_field(sim.pairwise[i], field_prefix(dir / "truth", "pair", i));
    if (!sim.spectra.empty()) {
        std::vector<RasterArray> slices;
        for (const SpectralFrame &s : sim.spectra) slices.push_back(to_raster(s));
        write_raster(stack_frames(slices), dir / "spectra.ocer");
    }
    if (a.previews) {
        for (std::size_t t = 0; t < sim.noisy.size(); ++t) {
            write_pgm(sim.noisy[t], dir / ("frame_" + std::to_string(t) + ".pgm"));
        }
    }
    // Effective configuration, so later stages can read the same spectral geometry.
    std::ofstream conf(dir / "simulation.conf");
    conf << "# written by oce simulate\n";
    for (const auto &[k, v] : kv.entries()) conf << k << " = " << v << '\n';
    if (!g.quiet) {
        err << "oce: simulated " << sim.noisy.size() << " frames of " << sc.scene.rows << "x" << sc.scene.cols
            << " into " << dir.string() << '\n';
    }
}

// ---- reconstruct ------------------------------------------------------------

struct ReconstructArgs {
    ConfigArgs config;
    std::string input, output;
    bool isam = false, no_isam = false, suppress = false, complex_out = false;
    std::optional<std::size_t> guard_rows, focus_row;
};

void do_reconstruct(const ReconstructArgs &a, const Globals &g, std::ostream &err) {
    const KeyValueConfig kv = load_config(a.config, g);
    pipeline::PipelineConfig cfg = pipeline::pipeline_config_from(kv);
    auto &r = cfg.recon;
    if (a.isam) r.mode = pipeline::Preprocess::isam;
    if (a.no_isam) r.mode = pipeline::Preprocess::ifft;
    if (a.suppress) r.suppress_negative_delay = true;
    if (a.guard_rows) r.guard_rows = *a.guard_rows;
    if (a.focus_row) r.focus_row = *a.focus_row;

    const auto spectra = read_spectra(split_frames(read_raster(a.input)), spectral_geometry(kv));
    if (a.complex_out) {
        std::vector<ComplexImage> imgs(spectra.size());
        parallel_for(spectra.size(), [&](std::size_t t) {
            SpectralFrame s = r.suppress_negative_delay ? recon::suppress_negative_delay(spectra[t], r.guard_rows)
                                                        : spectra[t];
            if (r.mode == pipeline::Preprocess::isam) {
                recon::IsamConfig ic = recon::IsamConfig::for_frame(s, r.focus_row.value_or(s.n_k / 4));
                ic.nufft_oversampling = r.nufft_oversampling;
                ic.kernel_width = r.kernel_width;
                ic.kernel_beta = r.kernel_beta;
                imgs[t] = recon::isam_resample(s, ic);
            } else {
                imgs[t] = recon::reconstruct_ifft(s);
            }
        });
        write_complex(imgs, a.output);
    } else {
        write_images(pipeline::preprocess_spectra(spectra, r).frames, a.output);
    }
    if (!g.quiet) {
        err << "oce: reconstructed " << spectra.size() << " frame(s) with "
            << (r.mode == pipeline::Preprocess::isam ? "ISAM" : "IFFT") << '\n';
    }
}

// ---- flow -------------------------------------------------------------------

struct FlowArgs {
    ConfigArgs config;
    std::string ref, mov, out, preview;
    std::size_t preview_spacing = 16;
};

void do_flow(const FlowArgs &a, const Globals &g, std::ostream &err) {
    const pipeline::PipelineConfig cfg = pipeline::pipeline_config_from(load_config(a.config, g));
    const Image ref = read_single_image(a.ref);
    const Image mov = read_single_image(a.mov);
    const DisplacementField f = flow::estimate_flow(ref, mov, cfg.flow);
    write_field(f, a.out);
    if (!a.preview.empty()) write_pgm(quiver_preview(ref, f, std::max<std::size_t>(a.preview_spacing, 2)), a.preview);
    if (!g.quiet) {
        std::size_t valid = 0;
        for (auto v : f.valid) valid += v != 0;
        err << "oce: flow " << f.rows << "x" << f.cols << ", " << valid << " valid pixels\n";
    }
}

// ---- denoise ----------------------------------------------------------------

struct DenoiseArgs {
    ConfigArgs config;
    std::string input, output, masks, sigma;
    bool no_wiener = false;
    std::optional<std::size_t> block, group, search;
};

void do_denoise(const DenoiseArgs &a, const Globals &g, std::ostream &err) {
    pipeline::PipelineConfig cfg = pipeline::pipeline_config_from(load_config(a.config, g));
    auto &d = cfg.denoise;
    if (!a.sigma.empty()) {
        if (a.sigma == "auto") {
            d.sigma = -1.0;
        } else {
            try {
                std::size_t used = 0;
                d.sigma = std::stod(a.sigma, &used);
                if (used != a.sigma.size() || d.sigma < 0.0) throw std::invalid_argument(a.sigma);
            } catch (const std::exception &) {
                throw ConfigError("--sigma expects 'auto' or a non-negative number, got '" + a.sigma + "'");
            }
        }
    }
    if (a.no_wiener) d.wiener_stage = false;
    if (a.block) d.block = *a.block;
    if (a.group) d.max_group = *a.group;
    if (a.search) d.search_window = *a.search;
    d.validate();

    FrameStack stack(read_images(a.input));
    std::vector<Mask> masks;
    if (!a.masks.empty()) masks = read_masks(a.masks);
    double sigma = 0.0;
    const FrameStack out = denoise::denoise_stack(stack, masks, d, &sigma);
    write_images(out.frames, a.output);
    if (!g.quiet) err << "oce: denoised " << out.size() << " frame(s), sigma " << sigma << '\n';
}

// ---- pipeline ---------------------------------------------------------------

struct PipelineArgs {
    ConfigArgs config;
    std::string input, truth, out_dir;
    bool previews = false;
};

pipeline::GroundTruth read_truth(const fs::path &dir, std::size_t n_frames) {
    pipeline::GroundTruth gt;
    if (fs::exists(dir / "clean.ocer")) gt.clean = read_images((dir / "clean.ocer").string());
    for (std::size_t i = 0; i + 1 < n_frames; ++i) {
        const std::string prefix = field_prefix(dir / "truth", "pair", i);
        if (!fs::exists(prefix + "_axial.ocer")) {
            if (i == 0) break;
            throw DomainError("ground truth is missing " + prefix);
        }
        gt.pairwise.push_back(read_field(prefix));
    }
    return gt;
}

void do_pipeline(const PipelineArgs &a, const Globals &g, std::ostream &err) {
    const KeyValueConfig kv = load_config(a.config, g);
    const pipeline::PipelineConfig cfg = pipeline::pipeline_config_from(kv);

    const auto slices = split_frames(read_raster(a.input));
    std::optional<pipeline::GroundTruth> gt;
    if (!a.truth.empty()) gt = read_truth(a.truth, slices.size());

    pipeline::PipelineReport rep;
    if (slices.front().dtype() == DType::c64) {
        rep = pipeline::run_pipeline(read_spectra(slices, spectral_geometry(kv)), cfg, gt ? &*gt : nullptr);
    } else {
        std::vector<Image> imgs;
        for (const RasterArray &s : slices) imgs.push_back(image_from_raster(s));
        rep = pipeline::run_pipeline(FrameStack(std::move(imgs)), cfg, gt ? &*gt : nullptr);
    }

    const fs::path dir(a.out_dir);
    fs::create_directories(dir / "fields");
    {
        std::ofstream m(dir / "metrics.csv");
        pipeline::write_metrics_csv(rep.metrics, m);
        std::ofstream t(dir / "runtimes.csv");
        pipeline::write_runtimes_csv(rep, t);
    }
    write_images(rep.preprocessed.frames, dir / "preprocessed.ocer");
    write_images(rep.denoised().frames, dir / "denoised.ocer");
    for (std::size_t i = 0; i < rep.initial_fields.size(); ++i) {
        write_field(rep.initial_fields[i], field_prefix(dir / "fields", "initial", i));
        write_field(rep.final_fields[i], field_prefix(dir / "fields", "final", i));
    }
    if (a.previews) {
        const std::size_t r = rep.reference_index;
        write_pgm(rep.preprocessed[r], dir / "reference_noisy.pgm");
        write_pgm(rep.denoised()[r], dir / "reference_denoised.pgm");
        if (r < rep.initial_fields.size()) {
            write_pgm(quiver_preview(rep.preprocessed[r], rep.initial_fields[r], 16), dir / "flow_initial.pgm");
            write_pgm(quiver_preview(rep.denoised()[r], rep.final_fields[r], 16), dir / "flow_final.pgm");
        }
    }
    if (!g.quiet) {
        err << "oce: pipeline finished, reference frame " << rep.reference_index << ", " << rep.metrics.size()
            << " metric rows in " << (dir / "metrics.csv").string() << '\n';
    }
}

// ---- metrics ----------------------------------------------------------------

struct MetricsArgs {
    std::vector<std::string> est, truth;
    std::string kind = "image-rmse", out;
    std::size_t margin = 0;
};

std::vector<pipeline::MetricRow> image_metric(const MetricsArgs &a) {
    if (a.est.size() != 1 || a.truth.size() != 1) throw ConfigError("image metrics take one --est and one --truth");
    const auto est = read_images(a.est.front());
    const auto truth = read_images(a.truth.front());
    if (est.size() != truth.size()) throw ShapeError("--est and --truth hold different frame counts");
    const bool rmse = a.kind == "image-rmse";
    const std::string name = rmse ? "image_rmse" : "image_ncc";
    std::optional<Mask> region;
    if (a.margin > 0) region = pipeline::interior_mask(est.front().rows(), est.front().cols(), a.margin);

    std::vector<pipeline::MetricRow> rows;
    double acc = 0.0;
    for (std::size_t t = 0; t < est.size(); ++t) {
        double v = 0.0;
        if (rmse) {
            v = pipeline::rmse_image(est[t], truth[t], region ? &*region : nullptr);
            acc += v * v;
        } else {
            v = pipeline::ncc(est[t], truth[t]);
            acc += v;
        }
        if (est.size() > 1) rows.push_back({name, v, std::to_string(t)});
    }
    const double n = static_cast<double>(est.size());
    rows.push_back({name, rmse ? std::sqrt(acc / n) : acc / n, "all"});
    return rows;
}

std::vector<pipeline::MetricRow> field_metric(const MetricsArgs &a) {
    std::vector<DisplacementField> est;
    for (const std::string &p : a.est) est.push_back(read_field(p));
    std::optional<Mask> region;
    if (a.margin > 0) region = pipeline::interior_mask(est.front().rows, est.front().cols, a.margin);
    const Mask *reg = region ? &*region : nullptr;

    std::vector<pipeline::MetricRow> rows;
    if (a.kind == "field-gradient") {
        if (!a.truth.empty()) throw ConfigError("field-gradient takes no --truth");
        double sum = 0.0;
        for (std::size_t i = 0; i < est.size(); ++i) {
            const double v = pipeline::mean_gradient_magnitude(est[i], reg);
            if (est.size() > 1) rows.push_back({"field_gradient", v, std::to_string(i)});
            sum += v;
        }
        rows.push_back({"field_gradient", sum / static_cast<double>(est.size()), "all"});
        return rows;
    }
    if (a.truth.size() != a.est.size()) throw ConfigError("field-rmse needs as many --truth prefixes as --est");
    std::vector<DisplacementField> truth;
    for (const std::string &p : a.truth) truth.push_back(read_field(p));
    if (est.size() > 1) {
        for (std::size_t i = 0; i < est.size(); ++i) {
            const auto e = pipeline::rmse_field(est[i], truth[i], reg);
            rows.push_back({"field_rmse_lateral", e.lateral, std::to_string(i)});
            rows.push_back({"field_rmse_axial", e.axial, std::to_string(i)});
        }
    }
    const auto all = pipeline::rmse_field(est, truth, reg);
    rows.push_back({"field_rmse_lateral", all.lateral, "all"});
    rows.push_back({"field_rmse_axial", all.axial, "all"});
    return rows;
}

void do_metrics(const MetricsArgs &a, std::ostream &out) {
    const bool image = a.kind == "image-rmse" || a.kind == "image-ncc";
    write_metric_rows(image ? image_metric(a) : field_metric(a), a.out, out);
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Motion-compensated OCT denoising and sub-pixel displacement estimation", "oce"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--threads", g.threads, "worker threads (0 = hardware concurrency)");
    app.add_option("--seed", g.seed, "seed for every random draw (scene, motion, noise)");
    app.add_flag("--quiet,-q", g.quiet, "no progress messages");

    SimulateArgs sim;
    auto *c_sim = app.add_subcommand("simulate", "render a phantom sequence with ground truth");
    add_config_args(c_sim, sim.config);
    c_sim->add_option("--out,-o", sim.out_dir, "output directory")->required();
    c_sim->add_flag("--previews", sim.previews, "also write PGM previews");

    ReconstructArgs rec;
    auto *c_rec = app.add_subcommand("reconstruct", "spectra to images by IFFT or ISAM");
    add_config_args(c_rec, rec.config);
    c_rec->add_option("--input,-i", rec.input, "c64 spectra raster (2-D or stack)")->required();
    c_rec->add_option("--output,-o", rec.output, "output raster")->required();
    auto *o_isam = c_rec->add_flag("--isam", rec.isam, "ISAM resampling");
    auto *o_noisam = c_rec->add_flag("--no-isam", rec.no_isam, "plain inverse FFT");
    o_isam->excludes(o_noisam);
    c_rec->add_flag("--suppress-negative-delay", rec.suppress, "zero the negative-delay half before imaging");
    c_rec->add_option("--guard-rows", rec.guard_rows, "negative-delay rows kept next to zero delay");
    c_rec->add_option("--focus-row", rec.focus_row, "focal depth row for ISAM");
    c_rec->add_flag("--complex", rec.complex_out, "write complex images instead of display units");

    FlowArgs fl;
    auto *c_flow = app.add_subcommand("flow", "dense displacement between two images");
    add_config_args(c_flow, fl.config);
    c_flow->add_option("--ref", fl.ref, "reference image")->required();
    c_flow->add_option("--mov", fl.mov, "moving image")->required();
    c_flow->add_option("--out,-o", fl.out, "output prefix for _axial/_lateral/_mask rasters")->required();
    c_flow->add_option("--preview", fl.preview, "PGM quiver preview");
    c_flow->add_option("--preview-spacing", fl.preview_spacing, "arrow spacing in pixels");

    DenoiseArgs dn;
    auto *c_dn = app.add_subcommand("denoise", "collaborative filtering of an aligned stack");
    add_config_args(c_dn, dn.config);
    c_dn->add_option("--input,-i", dn.input, "aligned f64 stack")->required();
    c_dn->add_option("--output,-o", dn.output, "output stack")->required();
    c_dn->add_option("--masks", dn.masks, "u8 stack of out-of-view masks");
    c_dn->add_option("--sigma", dn.sigma, "noise level: auto or a value");
    c_dn->add_flag("--no-wiener", dn.no_wiener, "hard-threshold stage only");
    c_dn->add_option("--block", dn.block, "block size");
    c_dn->add_option("--group", dn.group, "blocks per group");
    c_dn->add_option("--search", dn.search, "search window");

    PipelineArgs pl;
    auto *c_pl = app.add_subcommand("pipeline", "full estimate, denoise and re-estimate loop");
    add_config_args(c_pl, pl.config);
    c_pl->add_option("--input,-i", pl.input, "f64 frame stack or c64 spectra stack")->required();
    c_pl->add_option("--truth", pl.truth, "simulate output directory with ground truth");
    c_pl->add_option("--out,-o", pl.out_dir, "output directory")->required();
    c_pl->add_flag("--previews", pl.previews, "also write PGM previews");

    MetricsArgs mt;
    auto *c_mt = app.add_subcommand("metrics", "error metrics as CSV");
    c_mt->add_option("--est", mt.est, "estimate raster, or field prefixes")->required()->take_all();
    c_mt->add_option("--truth", mt.truth, "truth raster, or field prefixes")->take_all();
    c_mt->add_option("--kind", mt.kind, "image-rmse, image-ncc, field-rmse or field-gradient")
        ->check(CLI::IsMember({"image-rmse", "image-ncc", "field-rmse", "field-gradient"}));
    c_mt->add_option("--margin", mt.margin, "exclude this many border pixels");
    c_mt->add_option("--out,-o", mt.out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        const CLI::App *scope = &app;
        for (const CLI::App *sub : app.get_subcommands()) scope = sub;
        err << '\n' << scope->help();
        return kExitUsage;
    }
    if (c_mt->parsed() && mt.truth.empty() && mt.kind != "field-gradient") {
        err << "oce: metrics --kind " << mt.kind << " needs --truth\n";
        return kExitUsage;
    }

    try {
        set_thread_count(g.threads);
        if (c_sim->parsed()) do_simulate(sim, g, err);
        if (c_rec->parsed()) do_reconstruct(rec, g, err);
        if (c_flow->parsed()) do_flow(fl, g, err);
        if (c_dn->parsed()) do_denoise(dn, g, err);
        if (c_pl->parsed()) do_pipeline(pl, g, err);
        if (c_mt->parsed()) do_metrics(mt, out);
    } catch (const ConfigError &e) {
        err << "oce: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        err << "oce: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

} // namespace oce::cli
