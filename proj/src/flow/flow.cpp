#include <algorithm>
#include <cmath>

#include "oce/core/parallel.hpp"
#include "oce/flow/flow.hpp"

namespace oce::flow {

void FlowConfig::validate() const {
    if (passes.empty()) throw ConfigError("flow: at least one pass is required");
    for (std::size_t i = 0; i < passes.size(); ++i) {
        const PassSpec &p = passes[i];
        if (p.window < 8) throw ConfigError("flow: window must be >= 8");
        if (p.overlap >= p.window) throw ConfigError("flow: overlap must be smaller than the window");
        if (p.search_margin < 1) throw ConfigError("flow: search margin must be >= 1");
        if (i > 0 && p.window >= passes[i - 1].window) throw ConfigError("flow: windows must strictly decrease");
    }
    if (!(min_ncc > 0.0 && min_ncc < 1.0)) throw ConfigError("flow: min_ncc must lie in (0, 1)");
    if (!(outlier_tol > 0.0)) throw ConfigError("flow: outlier_tol must be positive");
}

std::size_t BlockGridField::valid_count() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const BlockCell &c) { return c.valid; }));
}

BlockGridField make_block_grid(std::size_t rows, std::size_t cols, std::size_t window, std::size_t overlap) {
    if (overlap >= window) throw ConfigError("flow: overlap must be smaller than the window");
    if (window > rows || window > cols) throw ShapeError("flow: window does not fit inside the image");
    BlockGridField g;
    g.window = window;
    g.step = window - overlap;
    g.grid_rows = (rows - window) / g.step + 1;
    g.grid_cols = (cols - window) / g.step + 1;
    const std::size_t off_r = ((rows - window) - (g.grid_rows - 1) * g.step) / 2;
    const std::size_t off_c = ((cols - window) - (g.grid_cols - 1) * g.step) / 2;
    g.origin_row = static_cast<double>(off_r) + 0.5 * static_cast<double>(window - 1);
    g.origin_col = static_cast<double>(off_c) + 0.5 * static_cast<double>(window - 1);
    g.cells.resize(g.grid_rows * g.grid_cols);
    for (std::size_t i = 0; i < g.grid_rows; ++i) {
        for (std::size_t j = 0; j < g.grid_cols; ++j) {
            BlockCell &c = g.at(i, j);
            c.center_row = g.origin_row + static_cast<double>(i * g.step);
            c.center_col = g.origin_col + static_cast<double>(j * g.step);
        }
    }
    return g;
}

namespace {

void match_cell(const Image &ref, const Image &mov, const BlockGridField &g, std::size_t margin,
                const FlowConfig &cfg, const DisplacementField *init, BlockCell &cell) {
    const double half = 0.5 * static_cast<double>(g.window - 1);
    const auto r0 = static_cast<std::size_t>(cell.center_row - half);
    const auto c0 = static_cast<std::size_t>(cell.center_col - half);

    std::ptrdiff_t base_a = 0, base_l = 0;
    if (init) {
        double ua = 0.0, ul = 0.0;
        init->sample(cell.center_row, cell.center_col, ua, ul);
        base_a = static_cast<std::ptrdiff_t>(std::lround(ua));
        base_l = static_cast<std::ptrdiff_t>(std::lround(ul));
    }

    cell.valid = false;
    cell.du_axial = cell.du_lateral = cell.ncc_peak = 0.0;
    const NccSurface s = ncc_surface(ref, mov, r0, c0, g.window, base_a, base_l, margin);
    if (s.values.empty() || s.degenerate_ref) return;

    std::ptrdiff_t pa = s.lo_axial, pl = s.lo_lateral;
    double best = -2.0;
    for (std::ptrdiff_t a = s.lo_axial; a <= s.hi_axial; ++a) {
        for (std::ptrdiff_t l = s.lo_lateral; l <= s.hi_lateral; ++l) {
            if (s.at(a, l) > best) {
                best = s.at(a, l);
                pa = a;
                pl = l;
            }
        }
    }
    cell.ncc_peak = best;
    const auto m = static_cast<std::ptrdiff_t>(margin);
    // A maximum on the search margin is unresolved. On an edge clipped by the
    // image it is kept, but that axis gets no sub-pixel refinement.
    if (std::abs(pa) >= m || std::abs(pl) >= m) return;
    if (best < cfg.min_ncc) return;

    // A perfect match at an integer shift is already exact; the neighbours of
    // such a peak are not symmetric, so a fit would only add a small bias.
    if (best >= 1.0 - 1e-12) {
        cell.valid = true;
        cell.du_axial = static_cast<double>(base_a + pa);
        cell.du_lateral = static_cast<double>(base_l + pl);
        return;
    }

    const bool axial_fit = pa > s.lo_axial && pa < s.hi_axial;
    const bool lateral_fit = pl > s.lo_lateral && pl < s.hi_lateral;
    double da = 0.0, dl = 0.0;
    bool clamped = false;
    if (axial_fit && lateral_fit) {
        std::array<std::array<double, 3>, 3> nb{};
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) nb[i + 1][j + 1] = s.at(pa + i, pl + j);
        const SubpixelResult r = subpixel_peak(nb, cfg.peak_fit);
        da = r.axial;
        dl = r.lateral;
        clamped = r.clamped;
    } else if (axial_fit) {
        da = subpixel_peak_1d(s.at(pa - 1, pl), best, s.at(pa + 1, pl), cfg.peak_fit, clamped);
    } else if (lateral_fit) {
        dl = subpixel_peak_1d(s.at(pa, pl - 1), best, s.at(pa, pl + 1), cfg.peak_fit, clamped);
    }
    cell.clamped = clamped;
    if (clamped) return;
    cell.valid = true;
    cell.du_axial = static_cast<double>(base_a + pa) + da;
    cell.du_lateral = static_cast<double>(base_l + pl) + dl;
}

double median_of(std::vector<double> &v) {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    const double hi = v[h];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
    return 0.5 * (lo + hi);
}

} // namespace

BlockGridField ncc_match_pass(const Image &ref, const Image &mov, std::size_t window, std::size_t overlap,
                              std::size_t search_margin, const FlowConfig &cfg, const DisplacementField *init) {
    if (!ref.geometry().same_shape(mov.geometry())) throw ShapeError("flow: image shapes differ");
    if (init && (init->rows != ref.rows() || init->cols != ref.cols())) {
        throw ShapeError("flow: initial field shape differs from the images");
    }
    BlockGridField g = make_block_grid(ref.rows(), ref.cols(), window, overlap);
    parallel_for(g.cells.size(), [&](std::size_t i) { match_cell(ref, mov, g, search_margin, cfg, init, g.cells[i]); });
    return g;
}

BlockGridField fill_and_smooth(const BlockGridField &grid, const FlowConfig &cfg) {
    BlockGridField out = grid;
    const auto gr = static_cast<std::ptrdiff_t>(grid.grid_rows);
    const auto gc = static_cast<std::ptrdiff_t>(grid.grid_cols);
    const auto rad = static_cast<std::ptrdiff_t>(cfg.outlier_median_radius);

    std::vector<double> na, nl;
    for (std::ptrdiff_t i = 0; i < gr; ++i) {
        for (std::ptrdiff_t j = 0; j < gc; ++j) {
            const BlockCell &c = grid.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (!c.valid || rad == 0) continue;
            na.clear();
            nl.clear();
            for (std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, i - rad); a <= std::min(gr - 1, i + rad); ++a) {
                for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(0, j - rad); b <= std::min(gc - 1, j + rad); ++b) {
                    if (a == i && b == j) continue;
                    const BlockCell &n = grid.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
                    if (!n.valid) continue;
                    na.push_back(n.du_axial);
                    nl.push_back(n.du_lateral);
                }
            }
            if (na.empty()) continue;
            const double ma = median_of(na), ml = median_of(nl);
            if (std::hypot(c.du_axial - ma, c.du_lateral - ml) > cfg.outlier_tol) {
                BlockCell &o = out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                o.valid = false;
                o.du_axial = o.du_lateral = 0.0;
            }
        }
    }

    if (out.valid_count() == 0) {
        out.all_invalid_warning = true;
        return out;
    }

    const BlockGridField kept = out;
    const std::ptrdiff_t max_rad = std::max(gr, gc);
    for (std::ptrdiff_t i = 0; i < gr; ++i) {
        for (std::ptrdiff_t j = 0; j < gc; ++j) {
            if (kept.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)).valid) continue;
            for (std::ptrdiff_t r = 1; r <= max_rad; ++r) {
                double wsum = 0.0, sa = 0.0, sl = 0.0;
                for (std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, i - r); a <= std::min(gr - 1, i + r); ++a) {
                    for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(0, j - r); b <= std::min(gc - 1, j + r); ++b) {
                        const BlockCell &n = kept.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
                        if (!n.valid) continue;
                        const double w = 1.0 / std::hypot(static_cast<double>(a - i), static_cast<double>(b - j));
                        wsum += w;
                        sa += w * n.du_axial;
                        sl += w * n.du_lateral;
                    }
                }
                if (wsum > 0.0) {
                    BlockCell &o = out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                    o.du_axial = sa / wsum;
                    o.du_lateral = sl / wsum;
                    o.valid = true;
                    o.filled = true;
                    break;
                }
            }
        }
    }
    return out;
}

DisplacementField upsample_field(const BlockGridField &grid, std::size_t rows, std::size_t cols) {
    if (grid.grid_rows < 2 || grid.grid_cols < 2) throw ShapeError("upsample_field: block grid must be at least 2x2");
    DisplacementField f(rows, cols);
    const double step = static_cast<double>(grid.step);
    for (std::size_t r = 0; r < rows; ++r) {
        const double gr = (static_cast<double>(r) - grid.origin_row) / step;
        std::size_t i0 = 0;
        double fi = 0.0;
        detail::clamp_cell(gr, grid.grid_rows, i0, fi);
        const std::size_t i1 = std::min(i0 + 1, grid.grid_rows - 1);
        for (std::size_t c = 0; c < cols; ++c) {
            const double gc = (static_cast<double>(c) - grid.origin_col) / step;
            std::size_t j0 = 0;
            double fj = 0.0;
            detail::clamp_cell(gc, grid.grid_cols, j0, fj);
            const std::size_t j1 = std::min(j0 + 1, grid.grid_cols - 1);
            const std::size_t k = f.index(r, c);
            const bool ok = grid.at(i0, j0).valid && grid.at(i0, j1).valid && grid.at(i1, j0).valid &&
                            grid.at(i1, j1).valid;
            f.valid[k] = ok ? 1 : 0;
            if (!ok) continue;
            f.axial[k] = bilinear_clamped(grid.grid_rows, grid.grid_cols, gr, gc,
                                          [&](std::size_t a, std::size_t b) { return grid.at(a, b).du_axial; });
            f.lateral[k] = bilinear_clamped(grid.grid_rows, grid.grid_cols, gr, gc,
                                            [&](std::size_t a, std::size_t b) { return grid.at(a, b).du_lateral; });
        }
    }
    return f;
}

DisplacementField estimate_flow(const Image &ref, const Image &mov, const FlowConfig &cfg) {
    cfg.validate();
    if (!ref.geometry().same_shape(mov.geometry())) throw ShapeError("flow: image shapes differ");
    const std::size_t rows = ref.rows(), cols = ref.cols();

    std::optional<DisplacementField> current;
    for (const PassSpec &p : cfg.passes) {
        if (p.window > rows || p.window > cols) continue;
        const std::size_t step = p.window - p.overlap;
        if ((rows - p.window) / step < 1 || (cols - p.window) / step < 1) continue;
        BlockGridField g = ncc_match_pass(ref, mov, p.window, p.overlap, p.search_margin, cfg,
                                          current ? &*current : nullptr);
        g = fill_and_smooth(g, cfg);
        current = upsample_field(g, rows, cols);
        current->enforce_invalid_identity();
    }
    if (!current) throw ShapeError("flow: no pass fits the image size");
    return *current;
}

} // namespace oce::flow
