#include "oce/denoise/denoise.hpp"

#include <algorithm>
#include <cmath>

#include "oce/core/parallel.hpp"
#include "oce/denoise/transforms.hpp"

namespace oce::denoise {

namespace {

constexpr double kKaiserBeta = 2.0;
constexpr std::size_t kBatch = 256;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<double> kaiser_window(std::size_t n, double beta) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    const double norm = std::cyl_bessel_i(0.0, beta);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
        w[i] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - x * x))) / norm;
    }
    return w;
}

void check_masks(const FrameStack &stack, const std::vector<Mask> &masks) {
    if (masks.empty()) return;
    if (masks.size() != stack.size()) throw ShapeError("denoise: need one mask per frame");
    for (const Mask &m : masks) {
        if (!m.geometry().same_shape(stack.geometry())) throw ShapeError("denoise: mask shape differs from frames");
    }
}

bool block_touches_mask(const std::vector<Mask> &masks, std::size_t r0, std::size_t c0, std::size_t b) {
    for (const Mask &m : masks)
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < b; ++j)
                if (m(r0 + i, c0 + j)) return true;
    return false;
}

} // namespace

void DenoiseConfig::validate() const {
    if (!is_pow2(block)) throw ConfigError("denoise: block must be a power of two");
    if (step < 1 || step > block) throw ConfigError("denoise: step must lie in [1, block]");
    if (max_group < 1) throw ConfigError("denoise: max_group must be >= 1");
    if (!(hard_lambda >= 0.0)) throw ConfigError("denoise: hard_lambda must be non-negative");
}

std::vector<std::size_t> lattice_positions(std::size_t n, std::size_t block, std::size_t step) {
    if (block > n) throw ShapeError("denoise: block larger than the image");
    std::vector<std::size_t> pos;
    for (std::size_t p = 0; p + block <= n; p += step) pos.push_back(p);
    if (pos.back() != n - block) pos.push_back(n - block);
    return pos;
}

double estimate_sigma(const FrameStack &stack) {
    stack.validate(1);
    const Image &f = stack[0];
    std::vector<double> hh;
    hh.reserve((f.rows() / 2) * (f.cols() / 2));
    for (std::size_t i = 0; i + 1 < f.rows(); i += 2) {
        for (std::size_t j = 0; j + 1 < f.cols(); j += 2) {
            hh.push_back(std::abs(0.5 * (f(i, j) - f(i, j + 1) - f(i + 1, j) + f(i + 1, j + 1))));
        }
    }
    if (hh.empty()) return 0.0;
    const std::size_t h = hh.size() / 2;
    std::nth_element(hh.begin(), hh.begin() + static_cast<std::ptrdiff_t>(h), hh.end());
    double med = hh[h];
    if (hh.size() % 2 == 0) med = 0.5 * (med + *std::max_element(hh.begin(), hh.begin() + static_cast<std::ptrdiff_t>(h)));
    return med / 0.6745;
}

BlockGroup extract_group(const FrameStack &stack, std::size_t block,
                         const std::vector<std::pair<std::size_t, std::size_t>> &members) {
    BlockGroup g;
    g.block = block;
    g.frames = stack.size();
    g.members = members;
    if (!members.empty()) {
        g.ref_row = members.front().first;
        g.ref_col = members.front().second;
    }
    g.data.resize(members.size() * g.member_size());
    std::size_t k = 0;
    for (const auto &[r0, c0] : members)
        for (std::size_t t = 0; t < g.frames; ++t)
            for (std::size_t i = 0; i < block; ++i)
                for (std::size_t j = 0; j < block; ++j) g.data[k++] = stack[t](r0 + i, c0 + j);
    return g;
}

BlockGroup group_blocks(const FrameStack &stack, const std::vector<Mask> &masks, std::size_t ref_row,
                        std::size_t ref_col, const DenoiseConfig &cfg) {
    stack.validate(1);
    check_masks(stack, masks);
    const std::size_t b = cfg.block;
    const std::size_t R = stack.geometry().rows, C = stack.geometry().cols;
    if (ref_row + b > R || ref_col + b > C) throw ShapeError("group_blocks: reference block outside the image");
    const std::size_t T = stack.size();

    const auto rows = lattice_positions(R, b, cfg.step);
    const auto cols = lattice_positions(C, b, cfg.step);
    const std::size_t half = cfg.search_window / 2;
    auto near = [&](std::size_t p, std::size_t q) { return (p > q ? p - q : q - p) <= half; };

    // Reference pixels that are out of view carry no weight in the distance.
    std::vector<double> wref(T * b * b, 1.0);
    double wsum = static_cast<double>(wref.size());
    if (!masks.empty()) {
        wsum = 0.0;
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < b; ++j) {
                    const double w = masks[t](ref_row + i, ref_col + j) ? 0.0 : 1.0;
                    wref[(t * b + i) * b + j] = w;
                    wsum += w;
                }
    }

    struct Cand {
        double dist;
        std::size_t r, c;
    };
    std::vector<Cand> cands;
    for (std::size_t r : rows) {
        if (!near(r, ref_row)) continue;
        for (std::size_t c : cols) {
            if (!near(c, ref_col) || (r == ref_row && c == ref_col)) continue;
            if (!masks.empty() && block_touches_mask(masks, r, c, b)) continue;
            double d = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                const Image &f = stack[t];
                for (std::size_t i = 0; i < b; ++i) {
                    for (std::size_t j = 0; j < b; ++j) {
                        const double e = f(ref_row + i, ref_col + j) - f(r + i, c + j);
                        d += wref[(t * b + i) * b + j] * e * e;
                    }
                }
            }
            cands.push_back({wsum > 0.0 ? d / wsum : 0.0, r, c});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand &a, const Cand &b2) { return a.dist < b2.dist; });

    std::vector<std::pair<std::size_t, std::size_t>> members{{ref_row, ref_col}};
    std::vector<double> dists{0.0};
    for (const Cand &c : cands) {
        if (members.size() >= cfg.max_group) break;
        members.emplace_back(c.r, c.c);
        dists.push_back(c.dist);
    }
    BlockGroup g = extract_group(stack, b, members);
    g.distances = std::move(dists);
    return g;
}

ShrinkResult shrink_group_hard(const BlockGroup &group, double sigma, double hard_lambda) {
    if (group.members.empty()) throw DomainError("shrink_group_hard: empty group");
    const GroupTransform tr(group.block, group.frames, group.members.size());
    ShrinkResult res;
    res.data = group.data;
    tr.forward(res.data);
    const double thr = hard_lambda * sigma;
    for (std::size_t i = 0; i < res.data.size(); ++i) {
        if (i != 0 && std::abs(res.data[i]) < thr) {
            res.data[i] = 0.0;
        } else {
            ++res.nonzero;
        }
    }
    tr.inverse(res.data);
    res.weight = 1.0 / (1.0 + static_cast<double>(res.nonzero));
    return res;
}

ShrinkResult shrink_group_wiener(const BlockGroup &noisy, const BlockGroup &pilot, double sigma) {
    if (noisy.members.empty()) throw DomainError("shrink_group_wiener: empty group");
    if (noisy.data.size() != pilot.data.size()) throw ShapeError("shrink_group_wiener: pilot shape differs");
    const GroupTransform tr(noisy.block, noisy.frames, noisy.members.size());
    ShrinkResult res;
    res.data = noisy.data;
    std::vector<double> p = pilot.data;
    tr.forward(res.data);
    tr.forward(p);
    const double s2 = sigma * sigma;
    double gain_sq = 0.0;
    for (std::size_t i = 0; i < res.data.size(); ++i) {
        const double e = p[i] * p[i];
        const double g = e + s2 > 0.0 ? e / (e + s2) : 1.0;
        res.data[i] *= g;
        gain_sq += g * g;
        if (g > 0.0) ++res.nonzero;
    }
    tr.inverse(res.data);
    res.weight = 1.0 / (1.0 + gain_sq);
    return res;
}

Aggregator::Aggregator(const Geometry &geom, std::size_t frames, std::size_t block, const std::vector<Mask> *masks)
    : geom_(geom), frames_(frames), block_(block), masks_(masks && !masks->empty() ? masks : nullptr),
      window_(kaiser_window(block, kKaiserBeta)), num_(frames, std::vector<double>(geom.size(), 0.0)),
      den_(frames, std::vector<double>(geom.size(), 0.0)) {}

void Aggregator::add(const std::vector<std::pair<std::size_t, std::size_t>> &members, const std::vector<double> &data,
                     double weight) {
    const std::size_t b = block_;
    if (data.size() != members.size() * frames_ * b * b) throw ShapeError("aggregate: block data size mismatch");
    std::size_t k = 0;
    for (std::size_t m = 0; m < members.size(); ++m) {
        const auto [r0, c0] = members[m];
        if (r0 + b > geom_.rows || c0 + b > geom_.cols) throw ShapeError("aggregate: block outside the raster");
        for (std::size_t t = 0; t < frames_; ++t) {
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t j = 0; j < b; ++j, ++k) {
                    if (m > 0 && masks_ && (*masks_)[t](r0 + i, c0 + j)) continue;
                    const double w = weight * window_[i] * window_[j];
                    const std::size_t p = (r0 + i) * geom_.cols + c0 + j;
                    num_[t][p] += w * data[k];
                    den_[t][p] += w;
                }
            }
        }
    }
}

FrameStack Aggregator::result() const {
    FrameStack out;
    out.frames.reserve(frames_);
    for (std::size_t t = 0; t < frames_; ++t) {
        Image img(geom_);
        for (std::size_t p = 0; p < geom_.size(); ++p) {
            if (!(den_[t][p] > 0.0)) throw Error("aggregate: pixel not covered by any block");
            img[p] = num_[t][p] / den_[t][p];
        }
        out.frames.push_back(std::move(img));
    }
    return out;
}

FrameStack aggregate(const std::vector<AggregateItem> &items, const Geometry &geom, std::size_t frames,
                     std::size_t block) {
    Aggregator acc(geom, frames, block);
    for (const AggregateItem &it : items) acc.add(it.members, it.data, it.weight);
    return acc.result();
}

namespace {

// One stage over the whole reference lattice. Groups are computed in parallel
// batches and aggregated serially in lattice order.
FrameStack run_stage(const FrameStack &noisy, const FrameStack *pilot, const std::vector<Mask> &masks,
                     const DenoiseConfig &cfg, double sigma) {
    const Geometry &g = noisy.geometry();
    const auto rows = lattice_positions(g.rows, cfg.block, cfg.step);
    const auto cols = lattice_positions(g.cols, cfg.block, cfg.step);
    std::vector<std::pair<std::size_t, std::size_t>> refs;
    for (std::size_t r : rows)
        for (std::size_t c : cols) refs.emplace_back(r, c);

    Aggregator acc(g, noisy.size(), cfg.block, &masks);
    std::vector<ShrinkResult> batch;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> batch_members;
    for (std::size_t start = 0; start < refs.size(); start += kBatch) {
        const std::size_t n = std::min(kBatch, refs.size() - start);
        batch.assign(n, {});
        batch_members.assign(n, {});
        parallel_for(n, [&](std::size_t i) {
            const auto [r, c] = refs[start + i];
            if (pilot) {
                const BlockGroup pg = group_blocks(*pilot, masks, r, c, cfg);
                const BlockGroup ng = extract_group(noisy, cfg.block, pg.members);
                batch[i] = shrink_group_wiener(ng, pg, sigma);
                batch_members[i] = pg.members;
            } else {
                const BlockGroup ng = group_blocks(noisy, masks, r, c, cfg);
                batch[i] = shrink_group_hard(ng, sigma, cfg.hard_lambda);
                batch_members[i] = ng.members;
            }
        });
        for (std::size_t i = 0; i < n; ++i) acc.add(batch_members[i], batch[i].data, batch[i].weight);
    }
    return acc.result();
}

FrameStack denoise_core(const FrameStack &stack, const std::vector<Mask> &masks, const DenoiseConfig &cfg,
                        double sigma) {
    FrameStack basic = run_stage(stack, nullptr, masks, cfg, sigma);
    FrameStack out = cfg.wiener_stage ? run_stage(stack, &basic, masks, cfg, sigma) : std::move(basic);
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t].set_pitch(stack[t].pitch_axial(), stack[t].pitch_lateral());
        if (masks.empty()) continue;
        for (std::size_t p = 0; p < out[t].size(); ++p)
            if (masks[t][p]) out[t][p] = stack[t][p];
    }
    return out;
}

} // namespace

FrameStack denoise_stack(const FrameStack &stack, const std::vector<Mask> &masks, const DenoiseConfig &cfg,
                         double *sigma_used) {
    cfg.validate();
    stack.validate(2);
    check_masks(stack, masks);
    if (cfg.block > stack.geometry().rows || cfg.block > stack.geometry().cols) {
        throw ShapeError("denoise: block larger than the frames");
    }
    const double sigma = cfg.sigma >= 0.0 ? cfg.sigma : estimate_sigma(stack);
    if (sigma_used) *sigma_used = sigma;

    FrameStack out;
    if (cfg.use_full_temporal) {
        out = denoise_core(stack, masks, cfg, sigma);
    } else {
        for (std::size_t t = 0; t < stack.size(); ++t) {
            FrameStack single(std::vector<Image>{stack[t]});
            std::vector<Mask> m;
            if (!masks.empty()) m.push_back(masks[t]);
            out.frames.push_back(std::move(denoise_core(single, m, cfg, sigma).frames.front()));
        }
    }
    out.timestamps = stack.timestamps;
    return out;
}

} // namespace oce::denoise
