#include "oce/pipeline/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "oce/core/parallel.hpp"
#include "oce/pipeline/metrics.hpp"

namespace oce::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs one stage and prefixes any library error with the stage name, keeping its kind.
template <typename F>
auto staged(const char *stage, F &&f) -> decltype(f()) {
    auto tag = [&](const std::exception &e) { return std::string(stage) + ": " + e.what(); };
    try {
        return f();
    } catch (const ConfigError &e) {
        throw ConfigError(tag(e));
    } catch (const ShapeError &e) {
        throw ShapeError(tag(e));
    } catch (const DomainError &e) {
        throw DomainError(tag(e));
    } catch (const Error &e) {
        throw Error(tag(e));
    }
}

std::string pair_label(std::size_t i) { return std::to_string(i) + "-" + std::to_string(i + 1); }

void add_runtime(PipelineReport &rep, const std::string &name, double s) {
    for (auto &[n, v] : rep.runtimes) {
        if (n == name) {
            v += s;
            return;
        }
    }
    rep.runtimes.emplace_back(name, s);
}

} // namespace

void PipelineConfig::validate() const {
    flow.validate();
    denoise.validate();
    if (iterations < 1) throw ConfigError("pipeline: iterations must be >= 1");
    if (recon.floor_db >= 0.0) throw ConfigError("pipeline: floor_db must be negative");
}

std::size_t PipelineConfig::reference_for(std::size_t n_frames) const {
    const std::size_t ref = reference_index.value_or(n_frames / 2);
    if (ref >= n_frames) throw ConfigError("pipeline: reference_index out of range");
    return ref;
}

double PipelineReport::metric(const std::string &name, const std::string &frame_pair) const {
    for (const MetricRow &m : metrics)
        if (m.metric == name && m.frame_pair == frame_pair) return m.value;
    throw DomainError("report has no metric " + name + " for " + frame_pair);
}

FrameStack log_compress_stack(const std::vector<ComplexImage> &frames, double floor_db) {
    if (frames.empty()) throw DomainError("log_compress_stack: no frames");
    double ref = 0.0;
    for (const ComplexImage &f : frames) ref = std::max(ref, max_magnitude(f));
    FrameStack out;
    for (const ComplexImage &f : frames) out.frames.push_back(log_compress(f, floor_db, ref));
    return out;
}

FrameStack preprocess_spectra(const std::vector<SpectralFrame> &spectra, const ReconOptions &opts) {
    std::vector<ComplexImage> imgs(spectra.size());
    parallel_for(spectra.size(), [&](std::size_t t) {
        SpectralFrame s = opts.suppress_negative_delay ? recon::suppress_negative_delay(spectra[t], opts.guard_rows)
                                                       : spectra[t];
        if (opts.mode == Preprocess::isam) {
            recon::IsamConfig ic = recon::IsamConfig::for_frame(s, opts.focus_row.value_or(s.n_k / 4));
            ic.nufft_oversampling = opts.nufft_oversampling;
            ic.kernel_width = opts.kernel_width;
            ic.kernel_beta = opts.kernel_beta;
            imgs[t] = recon::isam_resample(s, ic);
        } else {
            imgs[t] = recon::reconstruct_ifft(s);
        }
    });
    return log_compress_stack(imgs, opts.floor_db);
}

std::vector<DisplacementField> pairwise_flow(const FrameStack &frames, const flow::FlowConfig &cfg) {
    std::vector<DisplacementField> out;
    out.reserve(frames.size() - 1);
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) out.push_back(flow::estimate_flow(frames[i], frames[i + 1], cfg));
    return out;
}

PipelineReport run_pipeline(const FrameStack &frames, const PipelineConfig &cfg, const GroundTruth *truth,
                            const WarpObserver &observer) {
    const auto t_total = Clock::now();
    staged("config", [&] { cfg.validate(); });
    staged("input", [&] {
        frames.validate(2);
        for (const Image &f : frames.frames)
            if (!all_finite(f)) throw DomainError("non-finite pixel in input frames");
    });

    PipelineReport rep;
    rep.preprocessed = frames;
    rep.reference_index = staged("config", [&] { return cfg.reference_for(frames.size()); });

    auto t0 = Clock::now();
    rep.initial_fields = staged("flow", [&] { return pairwise_flow(frames, cfg.flow); });
    add_runtime(rep, "flow_initial", seconds_since(t0));

    std::vector<DisplacementField> fields = rep.initial_fields;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        IterationRecord rec;
        rec.fields_used = fields;

        t0 = Clock::now();
        const auto ops = staged("warp", [&] { return warp::compose_to_reference(fields, rep.reference_index); });
        rec.warped.frames.resize(frames.size());
        rec.out_of_view.resize(frames.size());
        for (std::size_t t = 0; t < frames.size(); ++t) {
            // Warping always starts from the original preprocessed frames.
            const Image &input = rep.preprocessed[t];
            if (observer) observer({it, t, &input});
            rec.warped[t] = staged("warp", [&] { return ops[t].apply(input); });
            rec.out_of_view[t] = ops[t].out_of_view();
        }
        add_runtime(rep, "warp", seconds_since(t0));

        t0 = Clock::now();
        rec.denoised_warped = staged("denoise", [&] {
            return denoise::denoise_stack(rec.warped, rec.out_of_view, cfg.denoise, &rec.sigma);
        });
        add_runtime(rep, "denoise", seconds_since(t0));

        t0 = Clock::now();
        rec.unwarped.frames.resize(frames.size());
        for (std::size_t t = 0; t < frames.size(); ++t) {
            rec.unwarped[t] = staged("unwarp", [&] {
                return cfg.unwarp == Unwarp::adjoint
                           ? ops[t].apply_adjoint(rec.denoised_warped[t])
                           : ops[t].apply_adjoint_normalized(rec.denoised_warped[t], rep.preprocessed[t]);
            });
        }
        add_runtime(rep, "unwarp", seconds_since(t0));

        t0 = Clock::now();
        rec.reestimated = staged("flow", [&] { return pairwise_flow(rec.unwarped, cfg.flow); });
        add_runtime(rep, "flow_reestimate", seconds_since(t0));

        fields = rec.reestimated;
        rep.iterations.push_back(std::move(rec));
    }
    rep.final_fields = fields;

    t0 = Clock::now();
    rep.metrics = staged("metrics", [&] { return compute_metrics(rep, cfg, truth); });
    add_runtime(rep, "metrics", seconds_since(t0));
    add_runtime(rep, "total", seconds_since(t_total));
    return rep;
}

PipelineReport run_pipeline(const std::vector<SpectralFrame> &spectra, const PipelineConfig &cfg,
                            const GroundTruth *truth, const WarpObserver &observer) {
    const auto t0 = Clock::now();
    if (spectra.size() < 2) throw DomainError("input: at least two frames are required");
    const FrameStack frames = staged("preprocess", [&] { return preprocess_spectra(spectra, cfg.recon); });
    const double t_pre = seconds_since(t0);
    PipelineReport rep = run_pipeline(frames, cfg, truth, observer);
    rep.runtimes.insert(rep.runtimes.begin(), {"preprocess", t_pre});
    for (auto &[n, v] : rep.runtimes)
        if (n == "total") v += t_pre;
    return rep;
}

std::vector<MetricRow> compute_metrics(const PipelineReport &rep, const PipelineConfig &cfg,
                                       const GroundTruth *truth) {
    std::vector<MetricRow> rows;
    const std::size_t n_frames = rep.preprocessed.size();
    const Geometry &g = rep.preprocessed.geometry();
    const Mask region = interior_mask(g.rows, g.cols, cfg.metric_margin);

    for (std::size_t it = 0; it < rep.iterations.size(); ++it) {
        rows.push_back({"denoise_sigma", rep.iterations[it].sigma, "iter" + std::to_string(it + 1)});
    }

    auto gradient_rows = [&](const std::vector<DisplacementField> &fs, const std::string &tag) {
        double sum = 0.0;
        for (std::size_t i = 0; i < fs.size(); ++i) {
            const double v = mean_gradient_magnitude(fs[i], &region);
            rows.push_back({"field_gradient_" + tag, v, pair_label(i)});
            sum += v;
        }
        rows.push_back({"field_gradient_" + tag, sum / static_cast<double>(fs.size()), "all"});
    };
    gradient_rows(rep.initial_fields, "initial");
    gradient_rows(rep.final_fields, "final");

    if (!truth) return rows;

    if (!truth->pairwise.empty()) {
        if (truth->pairwise.size() != rep.initial_fields.size()) {
            throw ShapeError("ground truth has a different number of frame pairs");
        }
        auto field_rows = [&](const std::vector<DisplacementField> &fs, const std::string &tag) {
            for (std::size_t i = 0; i < fs.size(); ++i) {
                const FieldRmse e = rmse_field(fs[i], truth->pairwise[i], &region);
                rows.push_back({"field_rmse_lateral_" + tag, e.lateral, pair_label(i)});
                rows.push_back({"field_rmse_axial_" + tag, e.axial, pair_label(i)});
            }
            const FieldRmse all = rmse_field(fs, truth->pairwise, &region);
            rows.push_back({"field_rmse_lateral_" + tag, all.lateral, "all"});
            rows.push_back({"field_rmse_axial_" + tag, all.axial, "all"});
        };
        field_rows(rep.initial_fields, "initial");
        field_rows(rep.final_fields, "final");
    }

    if (!truth->clean.empty()) {
        if (truth->clean.size() != n_frames) throw ShapeError("ground truth has a different number of frames");
        auto image_rows = [&](const FrameStack &est, const std::string &tag) {
            double sq = 0.0, ncc_sum = 0.0;
            for (std::size_t t = 0; t < n_frames; ++t) {
                const double e = rmse_image(est[t], truth->clean[t], &region);
                const double c = ncc(est[t], truth->clean[t]);
                rows.push_back({"image_rmse_" + tag, e, std::to_string(t)});
                rows.push_back({"image_ncc_" + tag, c, std::to_string(t)});
                sq += e * e;
                ncc_sum += c;
            }
            rows.push_back({"image_rmse_" + tag, std::sqrt(sq / static_cast<double>(n_frames)), "all"});
            rows.push_back({"image_ncc_" + tag, ncc_sum / static_cast<double>(n_frames), "all"});
        };
        image_rows(rep.preprocessed, "noisy");
        image_rows(rep.denoised(), "denoised");
        const std::size_t r = rep.reference_index;
        rows.push_back({"image_rmse_noisy_reference", rmse_image(rep.preprocessed[r], truth->clean[r], &region),
                        std::to_string(r)});
        rows.push_back({"image_rmse_denoised_reference",
                        rmse_image(rep.denoised()[r], truth->clean[r], &region), std::to_string(r)});
    }
    return rows;
}

void write_metrics_csv(const std::vector<MetricRow> &rows, std::ostream &os) {
    os << "metric,value,frame_pair\n";
    for (const MetricRow &m : rows) {
        std::ostringstream v;
        v << std::setprecision(17) << m.value;
        os << m.metric << ',' << v.str() << ',' << m.frame_pair << '\n';
    }
}

void write_runtimes_csv(const PipelineReport &report, std::ostream &os) {
    os << "stage,seconds\n";
    for (const auto &[n, v] : report.runtimes) os << n << ',' << std::setprecision(6) << v << '\n';
}

} // namespace oce::pipeline
