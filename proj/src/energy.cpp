#include "form/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "form/autodiff.hpp"

namespace form {

namespace {

using Q = Quantity;

// One object's pose as differentiable quantities plus derived bounds.
struct Body {
    Q x, y, th;
    double hx = 0.0, hy = 0.0;
    Q c, s;
    Q ex, ey;  // half extents of the axis-aligned bounds

    Q left() const { return x - ex; }
    Q right() const { return x + ex; }
    Q bottom() const { return y - ey; }
    Q top() const { return y + ey; }
};

Body make_body(const ShapeDims& dims, const Pose& p, uint32_t base) {
    Body b;
    b.x = Q::variable(p.x, base);
    b.y = Q::variable(p.y, base + 1);
    b.th = Q::variable(p.theta, base + 2);
    b.hx = 0.5 * dims[0];
    b.hy = 0.5 * dims[1];
    b.c = cos(b.th);
    b.s = sin(b.th);
    const Q ac = abs(b.c);
    const Q as = abs(b.s);
    b.ex = ac * b.hx + as * b.hy;
    b.ey = as * b.hx + ac * b.hy;
    return b;
}

std::vector<Body> make_bodies(const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses) {
    std::vector<Body> out;
    out.reserve(poses.size());
    for (size_t i = 0; i < poses.size(); ++i) {
        out.push_back(make_body(shapes[i], poses[i], static_cast<uint32_t>(3 * i)));
    }
    return out;
}

// Hinge on `v < limit`, tightened by a margin capped at half the tolerance
// so the satisfied set never becomes empty.
struct Hinges {
    const Thresholds& th;
    const EnergyOptions& opt;

    double m(double tol) const { return std::min(opt.margin, 0.5 * tol); }
    double am() const { return std::min(opt.angle_margin, 0.5 * th.angle_tol); }

    // v < limit
    Q below(const Q& v, double limit, double tol) const { return hinge2(v - limit + m(tol)); }
    // v > limit
    Q above(const Q& v, double limit, double tol) const { return hinge2(limit - v + m(tol)); }
    Q angle_close(const Body& a, const Body& b) const {
        return hinge2(abs(wrap(a.th - b.th)) - th.angle_tol + am());
    }
};

Q horizontally_aligned(const Hinges& h, const Body& a, const Body& b) {
    return h.below(abs(a.bottom() - b.bottom()), h.th.align_tol, h.th.align_tol) + h.angle_close(a, b);
}

Q vertically_aligned(const Hinges& h, const Body& a, const Body& b) {
    return h.below(abs(a.x - b.x), h.th.align_tol, h.th.align_tol) + h.angle_close(a, b);
}

Q y_overlap_term(const Hinges& h, const Body& a, const Body& b) {
    const Q overlap = min(a.top(), b.top()) - max(a.bottom(), b.bottom());
    const Q need = h.th.overlap_frac * min(2.0 * a.ey, 2.0 * b.ey);
    return h.above(overlap - need, 0.0, h.th.align_tol);
}

Q left_of(const Hinges& h, const Body& a, const Body& b) {
    return h.below(abs(a.right() - b.left()), h.th.align_tol, h.th.align_tol) + y_overlap_term(h, a, b);
}

Q right_of(const Hinges& h, const Body& a, const Body& b) {
    return h.below(abs(a.left() - b.right()), h.th.align_tol, h.th.align_tol) + y_overlap_term(h, a, b);
}

Q point_near(const Hinges& h, const Q& dx, const Q& dy) {
    return h.below(hypot(dx, dy), h.th.center_tol, h.th.center_tol);
}

Q on_top_of(const Hinges& h, const Body& a, const Body& b) {
    Q e = 0.0;
    const double area_gap = 4.0 * a.hx * a.hy - 4.0 * b.hx * b.hy;
    if (area_gap > 0.0) {
        e = e + area_gap * area_gap;
    }
    const double slack = std::max(0.0, std::min(b.hx - a.hx, b.hy - a.hy));
    const double m = std::min(h.opt.margin, 0.5 * slack);
    for (double sx : {-1.0, 1.0}) {
        for (double sy : {-1.0, 1.0}) {
            const Q cx = a.x + a.c * (sx * a.hx) - a.s * (sy * a.hy);
            const Q cy = a.y + a.s * (sx * a.hx) + a.c * (sy * a.hy);
            const Q dx = cx - b.x;
            const Q dy = cy - b.y;
            const Q u = b.c * dx + b.s * dy;
            const Q v = b.c * dy - b.s * dx;
            e = e + hinge2(abs(u) - b.hx + m) + hinge2(abs(v) - b.hy + m);
        }
    }
    return e;
}

Q spread_of(const std::vector<Q>& v) {
    Q lo = v.front();
    Q hi = v.front();
    for (const auto& q : v) {
        lo = min(lo, q);
        hi = max(hi, q);
    }
    return hi - lo;
}

// Pairwise alignment plus ordered, equal spacing along the line in argument
// order.
Q aligned_line(const Hinges& h, const std::vector<Body>& g, bool horizontal) {
    const double a = h.th.align_tol;
    Q e = 0.0;
    for (size_t i = 0; i < g.size(); ++i) {
        for (size_t j = i + 1; j < g.size(); ++j) {
            e += horizontal ? horizontally_aligned(h, g[i], g[j]) : vertically_aligned(h, g[i], g[j]);
        }
    }
    std::vector<Q> gaps;
    for (size_t k = 0; k + 1 < g.size(); ++k) {
        const Q d = horizontal ? g[k + 1].x - g[k].x : g[k + 1].y - g[k].y;
        e += h.above(d, a, a);
        gaps.push_back(d);
    }
    e += h.below(spread_of(gaps), h.th.spacing_tol, h.th.spacing_tol);
    return e;
}

}  // namespace

// Most square factorization rows x cols = n with rows <= cols.
std::pair<size_t, size_t> grid_shape(size_t n) {
    size_t rows = 1;
    for (size_t r = 1; r * r <= n; ++r) {
        if (n % r == 0) {
            rows = r;
        }
    }
    return {rows, n / rows};
}

namespace {

// Row-major lattice: rows stacked along y, columns along x.
Q regular_grid(const Hinges& h, const std::vector<Body>& g) {
    const auto [rows, cols] = grid_shape(g.size());
    const double a = h.th.align_tol;
    const double sep = 2.0 * a;
    auto at = [&](size_t r, size_t c) -> const Body& { return g[r * cols + c]; };
    Q e = 0.0;
    auto lattice_axis = [&](size_t n_lines, size_t n_members, auto member, auto coord) {
        std::vector<Q> means;
        for (size_t l = 0; l < n_lines; ++l) {
            Q sum = 0.0;
            for (size_t i = 0; i < n_members; ++i) {
                sum += coord(member(l, i));
                for (size_t j = i + 1; j < n_members; ++j) {
                    e += h.below(abs(coord(member(l, i)) - coord(member(l, j))), a, a);
                }
            }
            means.push_back((1.0 / static_cast<double>(n_members)) * sum);
            if (l > 0) {
                for (size_t i = 0; i < n_members; ++i) {
                    for (size_t j = 0; j < n_members; ++j) {
                        e += h.above(coord(member(l, i)) - coord(member(l - 1, j)), sep, a);
                    }
                }
            }
        }
        if (n_lines >= 3) {
            std::vector<Q> gaps;
            for (size_t l = 0; l + 1 < n_lines; ++l) {
                gaps.push_back(means[l + 1] - means[l]);
            }
            e += h.below(spread_of(gaps), h.th.spacing_tol, h.th.spacing_tol);
        }
    };
    lattice_axis(
        rows, cols, [&](size_t r, size_t c) -> const Body& { return at(r, c); },
        [](const Body& b) -> const Q& { return b.y; });
    lattice_axis(
        cols, rows, [&](size_t c, size_t r) -> const Body& { return at(r, c); },
        [](const Body& b) -> const Q& { return b.x; });
    return e;
}

Q sorted_by_width(const Hinges& h, const std::vector<Body>& g, const std::vector<ShapeDims>& shapes) {
    std::vector<size_t> order(g.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return shapes[a][1] > shapes[b][1]; });
    Q e = 0.0;
    for (size_t k = 0; k + 1 < order.size(); ++k) {
        const Body& a = g[order[k]];
        const Body& b = g[order[k + 1]];
        e += left_of(h, a, b);
        e += h.above(b.x - a.x, 0.0, h.th.align_tol);
    }
    for (size_t i = 0; i < g.size(); ++i) {
        for (size_t j = i + 1; j < g.size(); ++j) {
            e += horizontally_aligned(h, g[i], g[j]);
        }
    }
    return e;
}

Q relation_energy(RelationId rel, const std::vector<Body>& g, const std::vector<ShapeDims>& shapes,
                  const Hinges& h) {
    const Thresholds& th = h.th;
    const double e = th.edge_near;
    switch (rel) {
        case RelationId::near_front_edge: return h.below(g[0].bottom(), e, e);
        case RelationId::near_back_edge: return h.below(1.0 - g[0].top(), e, e);
        case RelationId::near_left_edge: return h.below(g[0].left(), e, e);
        case RelationId::near_right_edge: return h.below(1.0 - g[0].right(), e, e);
        case RelationId::front_half: return h.below(g[0].top(), 0.5, e);
        case RelationId::back_half: return h.above(g[0].bottom(), 0.5, e);
        case RelationId::left_half: return h.below(g[0].right(), 0.5, e);
        case RelationId::right_half: return h.above(g[0].left(), 0.5, e);
        case RelationId::central_column: return h.above(g[0].x, 0.25, e) + h.below(g[0].x, 0.75, e);
        case RelationId::central_row: return h.above(g[0].y, 0.25, e) + h.below(g[0].y, 0.75, e);
        case RelationId::centered_table: return point_near(h, g[0].x - 0.5, g[0].y - 0.5);
        case RelationId::horizontally_aligned: return horizontally_aligned(h, g[0], g[1]);
        case RelationId::vertically_aligned: return vertically_aligned(h, g[0], g[1]);
        case RelationId::horizontal_symmetry_on_table: return point_near(h, g[0].x - g[1].x, g[0].y + g[1].y - 1.0);
        case RelationId::vertical_symmetry_on_table: return point_near(h, g[0].x + g[1].x - 1.0, g[0].y - g[1].y);
        case RelationId::left_of: return left_of(h, g[0], g[1]);
        case RelationId::right_of: return right_of(h, g[0], g[1]);
        case RelationId::centered: return point_near(h, g[0].x - g[1].x, g[0].y - g[1].y);
        case RelationId::on_top_of: return on_top_of(h, g[0], g[1]);
        case RelationId::vertical_line_symmetry:
            return point_near(h, g[1].x + g[2].x - 2.0 * g[0].x, g[1].y - g[2].y);
        case RelationId::horizontal_line_symmetry:
            return point_near(h, g[1].x - g[2].x, g[1].y + g[2].y - 2.0 * g[0].y);
        case RelationId::aligned_in_horizontal_line: return aligned_line(h, g, true);
        case RelationId::aligned_in_vertical_line: return aligned_line(h, g, false);
        case RelationId::regular_grid: return regular_grid(h, g);
        case RelationId::sorted: return sorted_by_width(h, g, shapes);
    }
    throw UnsupportedRelation("unsupported relation");
}

void check_arity(RelationId rel, const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses) {
    if (shapes.size() != poses.size()) {
        throw InvalidInput("shape and pose counts differ");
    }
    const int k = arity(rel);
    const bool ok = k == kVariableArity ? poses.size() >= kMinGroupSize : poses.size() == static_cast<size_t>(k);
    if (!ok) {
        throw InvalidInput(std::string(relation_name(rel)) + ": wrong number of objects (" +
                           std::to_string(poses.size()) + ")");
    }
}

}  // namespace

std::vector<ShapeDims> normalized_shapes(const std::vector<ObjectShape>& objects, const TableFrame& table) {
    std::vector<ShapeDims> out;
    out.reserve(objects.size());
    for (const auto& o : objects) {
        out.push_back({o.length / table.length, o.width / table.width});
    }
    return out;
}

double analytic_energy(RelationId rel, const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses,
                       const Thresholds& th, const EnergyOptions& opt) {
    return analytic_energy_grad(rel, shapes, poses, th, opt).value;
}

EnergyResult analytic_energy_grad(RelationId rel, const std::vector<ShapeDims>& shapes,
                                  const std::vector<Pose>& poses, const Thresholds& th, const EnergyOptions& opt) {
    (void)relation_name(rel);
    check_arity(rel, shapes, poses);
    const auto bodies = make_bodies(shapes, poses);
    const Q e = relation_energy(rel, bodies, shapes, Hinges{th, opt});
    EnergyResult out;
    out.value = e.value();
    out.grad.assign(3 * poses.size(), 0.0);
    e.accumulate(out.grad);
    return out;
}

namespace {

struct PlainBox {
    double x, y, c, s, hx, hy;
};

double support(const PlainBox& b, double nx, double ny) {
    return b.hx * std::abs(b.c * nx + b.s * ny) + b.hy * std::abs(-b.s * nx + b.c * ny);
}

// Separating-axis penetration depth in plain doubles, used to skip
// well-separated pairs before building differentiable quantities.
double plain_depth(const PlainBox& a, const PlainBox& b) {
    const double axes[4][2] = {{a.c, a.s}, {-a.s, a.c}, {b.c, b.s}, {-b.s, b.c}};
    double depth = std::numeric_limits<double>::infinity();
    for (const auto& n : axes) {
        const double d = support(a, n[0], n[1]) + support(b, n[0], n[1]) -
                         std::abs((a.x - b.x) * n[0] + (a.y - b.y) * n[1]);
        depth = std::min(depth, d);
    }
    return depth;
}

Q support_q(const Body& b, const Q& nx, const Q& ny) {
    return b.hx * abs(b.c * nx + b.s * ny) + b.hy * abs(b.c * ny - b.s * nx);
}

Q depth_q(const Body& a, const Body& b) {
    const std::array<std::pair<Q, Q>, 4> axes{
        std::pair<Q, Q>{a.c, a.s}, {-a.s, a.c}, {b.c, b.s}, {-b.s, b.c}};
    Q depth;
    bool first = true;
    for (const auto& [nx, ny] : axes) {
        const Q d = support_q(a, nx, ny) + support_q(b, nx, ny) - abs((a.x - b.x) * nx + (a.y - b.y) * ny);
        depth = first ? d : min(depth, d);
        first = false;
    }
    return depth;
}

}  // namespace

EnergyResult scene_energy_grad(const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses,
                               const SceneTerms& terms) {
    if (shapes.size() != poses.size()) {
        throw InvalidInput("shape and pose counts differ");
    }
    const size_t n = poses.size();
    EnergyResult out;
    out.grad.assign(3 * n, 0.0);
    std::vector<PlainBox> plain(n);
    for (size_t i = 0; i < n; ++i) {
        plain[i] = PlainBox{poses[i].x, poses[i].y, std::cos(poses[i].theta), std::sin(poses[i].theta),
                            0.5 * shapes[i][0], 0.5 * shapes[i][1]};
    }
    auto add = [&](const Q& q) {
        out.value += q.value();
        q.accumulate(out.grad);
    };
    if (terms.keep_on_table) {
        for (size_t i = 0; i < n; ++i) {
            const PlainBox& p = plain[i];
            const double ex = std::abs(p.c) * p.hx + std::abs(p.s) * p.hy;
            const double ey = std::abs(p.s) * p.hx + std::abs(p.c) * p.hy;
            if (p.x - ex >= 0.0 && p.x + ex <= 1.0 && p.y - ey >= 0.0 && p.y + ey <= 1.0) {
                continue;
            }
            const Body b = make_body(shapes[i], poses[i], static_cast<uint32_t>(3 * i));
            add(hinge2(-b.left()) + hinge2(b.right() - 1.0) + hinge2(-b.bottom()) + hinge2(b.top() - 1.0));
        }
    }
    if (terms.separate) {
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = i + 1; j < n; ++j) {
                if (plain_depth(plain[i], plain[j]) + terms.gap <= 0.0) {
                    continue;
                }
                const bool exempt = std::any_of(terms.exempt.begin(), terms.exempt.end(), [&](const auto& p) {
                    return (p.first == i && p.second == j) || (p.first == j && p.second == i);
                });
                if (exempt) {
                    continue;
                }
                const Body a = make_body(shapes[i], poses[i], static_cast<uint32_t>(3 * i));
                const Body b = make_body(shapes[j], poses[j], static_cast<uint32_t>(3 * j));
                add(hinge2(depth_q(a, b) + terms.gap));
            }
        }
    }
    return out;
}

}  // namespace form
