#include "form/relations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace form {

namespace {

struct RelationInfo {
    RelationId id;
    std::string_view name;
    int arity;
};

constexpr std::array<RelationInfo, kRelationCount> kRelations{{
    {RelationId::central_column, "central_column", 1},
    {RelationId::central_row, "central_row", 1},
    {RelationId::centered_table, "centered_table", 1},
    {RelationId::left_half, "left_half", 1},
    {RelationId::right_half, "right_half", 1},
    {RelationId::front_half, "front_half", 1},
    {RelationId::back_half, "back_half", 1},
    {RelationId::near_left_edge, "near_left_edge", 1},
    {RelationId::near_right_edge, "near_right_edge", 1},
    {RelationId::near_front_edge, "near_front_edge", 1},
    {RelationId::near_back_edge, "near_back_edge", 1},
    {RelationId::horizontally_aligned, "horizontally_aligned", 2},
    {RelationId::vertically_aligned, "vertically_aligned", 2},
    {RelationId::horizontal_symmetry_on_table, "horizontal_symmetry_on_table", 2},
    {RelationId::vertical_symmetry_on_table, "vertical_symmetry_on_table", 2},
    {RelationId::left_of, "left_of", 2},
    {RelationId::right_of, "right_of", 2},
    {RelationId::centered, "centered", 2},
    {RelationId::on_top_of, "on_top_of", 2},
    {RelationId::vertical_line_symmetry, "vertical_line_symmetry", 3},
    {RelationId::horizontal_line_symmetry, "horizontal_line_symmetry", 3},
    {RelationId::aligned_in_horizontal_line, "aligned_in_horizontal_line", kVariableArity},
    {RelationId::aligned_in_vertical_line, "aligned_in_vertical_line", kVariableArity},
    {RelationId::regular_grid, "regular_grid", kVariableArity},
    {RelationId::sorted, "sorted", kVariableArity},
}};

constexpr std::array<RelationId, kRelationCount> kAllIds = [] {
    std::array<RelationId, kRelationCount> ids{};
    for (size_t i = 0; i < kRelationCount; ++i) {
        ids[i] = kRelations[i].id;
    }
    return ids;
}();

const RelationInfo& info(RelationId id) {
    const auto idx = static_cast<size_t>(id);
    if (idx >= kRelations.size()) {
        throw UnsupportedRelation("unknown relation id " + std::to_string(idx));
    }
    return kRelations[idx];
}

// Per-object geometry in normalized table units.
struct ObjGeom {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    double width_key = 0.0;  // shape width, used by `sorted`
    double area = 0.0;
    OrientedBox box;
    Aabb bb;
};

ObjGeom geom_of(const Scene& scene, size_t idx) {
    const ObjectShape& shape = scene.objects[idx];
    const Pose& pose = (*scene.poses)[idx];
    ObjGeom g;
    g.x = pose.x;
    g.y = pose.y;
    g.theta = pose.theta;
    g.box = to_oriented_box(shape, pose, scene.table);
    g.bb = aabb_of(g.box);
    g.width_key = shape.width / scene.table.width;
    g.area = 4.0 * g.box.half_extents.x * g.box.half_extents.y;
    return g;
}

double angle_diff(double a, double b) { return std::abs(wrap_angle(a - b)); }

double y_overlap(const Aabb& a, const Aabb& b) { return std::min(a.top, b.top) - std::max(a.bottom, b.bottom); }

bool substantial_y_overlap(const ObjGeom& a, const ObjGeom& b, const Thresholds& th) {
    const double ha = a.bb.top - a.bb.bottom;
    const double hb = b.bb.top - b.bb.bottom;
    return y_overlap(a.bb, b.bb) > th.overlap_frac * std::min(ha, hb);
}

bool left_of(const ObjGeom& a, const ObjGeom& b, const Thresholds& th) {
    return std::abs(a.bb.right - b.bb.left) < th.align_tol && substantial_y_overlap(a, b, th);
}

bool horizontally_aligned(const ObjGeom& a, const ObjGeom& b, const Thresholds& th) {
    return std::abs(a.bb.bottom - b.bb.bottom) < th.align_tol && angle_diff(a.theta, b.theta) < th.angle_tol;
}

bool vertically_aligned(const ObjGeom& a, const ObjGeom& b, const Thresholds& th) {
    return std::abs(a.x - b.x) < th.align_tol && angle_diff(a.theta, b.theta) < th.angle_tol;
}

// Equal spacing of sorted positions: every gap exceeds the alignment
// tolerance and the gaps agree within the spacing tolerance.
bool equally_spaced(std::vector<double> coords, const Thresholds& th) {
    std::sort(coords.begin(), coords.end());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (size_t k = 0; k + 1 < coords.size(); ++k) {
        const double d = coords[k + 1] - coords[k];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return lo > th.align_tol && hi - lo < th.spacing_tol;
}

bool aligned_line(const std::vector<ObjGeom>& g, const Thresholds& th, bool horizontal) {
    if (g.size() < kMinGroupSize) {
        return false;
    }
    for (size_t i = 0; i < g.size(); ++i) {
        for (size_t j = i + 1; j < g.size(); ++j) {
            const bool ok = horizontal ? horizontally_aligned(g[i], g[j], th) : vertically_aligned(g[i], g[j], th);
            if (!ok) {
                return false;
            }
        }
    }
    std::vector<double> along;
    along.reserve(g.size());
    for (const auto& o : g) {
        along.push_back(horizontal ? o.x : o.y);
    }
    return equally_spaced(std::move(along), th);
}

// Single-linkage clusters of 1D values; returns cluster index per value,
// clusters numbered in increasing coordinate order.
std::vector<size_t> cluster_1d(const std::vector<double>& v, double tol, size_t& n_clusters) {
    std::vector<size_t> order(v.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<size_t> label(v.size(), 0);
    n_clusters = v.empty() ? 0 : 1;
    for (size_t k = 0; k < order.size(); ++k) {
        if (k > 0 && v[order[k]] - v[order[k - 1]] > tol) {
            ++n_clusters;
        }
        label[order[k]] = n_clusters - 1;
    }
    return label;
}

bool regular_grid(const std::vector<ObjGeom>& g, const Thresholds& th) {
    if (g.size() < kMinGroupSize) {
        return false;
    }
    std::vector<double> xs, ys;
    for (const auto& o : g) {
        xs.push_back(o.x);
        ys.push_back(o.y);
    }
    size_t n_rows = 0, n_cols = 0;
    const auto row = cluster_1d(ys, th.align_tol, n_rows);
    const auto col = cluster_1d(xs, th.align_tol, n_cols);
    if (n_rows * n_cols != g.size()) {
        return false;
    }
    std::set<std::pair<size_t, size_t>> cells;
    for (size_t i = 0; i < g.size(); ++i) {
        if (!cells.insert({row[i], col[i]}).second) {
            return false;
        }
    }
    auto line_ok = [&](const std::vector<size_t>& label, size_t n, const std::vector<double>& v) {
        std::vector<double> lo(n, std::numeric_limits<double>::infinity());
        std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
        std::vector<double> sum(n, 0.0);
        std::vector<size_t> cnt(n, 0);
        for (size_t i = 0; i < v.size(); ++i) {
            lo[label[i]] = std::min(lo[label[i]], v[i]);
            hi[label[i]] = std::max(hi[label[i]], v[i]);
            sum[label[i]] += v[i];
            ++cnt[label[i]];
        }
        for (size_t k = 0; k < n; ++k) {
            if (hi[k] - lo[k] >= th.align_tol) {
                return false;
            }
        }
        if (n < 3) {
            return true;
        }
        double dlo = std::numeric_limits<double>::infinity();
        double dhi = -dlo;
        for (size_t k = 0; k + 1 < n; ++k) {
            const double d = sum[k + 1] / cnt[k + 1] - sum[k] / cnt[k];
            dlo = std::min(dlo, d);
            dhi = std::max(dhi, d);
        }
        return dhi - dlo < th.spacing_tol;
    };
    return line_ok(row, n_rows, ys) && line_ok(col, n_cols, xs);
}

bool sorted_by_width(const std::vector<ObjGeom>& g, const Thresholds& th) {
    if (g.size() < kMinGroupSize) {
        return false;
    }
    std::vector<size_t> order(g.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return g[a].x < g[b].x; });
    for (size_t k = 0; k + 1 < order.size(); ++k) {
        const ObjGeom& a = g[order[k]];
        const ObjGeom& b = g[order[k + 1]];
        if (a.width_key < b.width_key || !left_of(a, b, th)) {
            return false;
        }
    }
    for (size_t i = 0; i < g.size(); ++i) {
        for (size_t j = i + 1; j < g.size(); ++j) {
            if (!horizontally_aligned(g[i], g[j], th)) {
                return false;
            }
        }
    }
    return true;
}

double hypot2(double a, double b) { return std::sqrt(a * a + b * b); }

bool classify_geoms(RelationId rel, const std::vector<ObjGeom>& g, const Thresholds& th) {
    switch (rel) {
        case RelationId::near_front_edge: return g[0].bb.bottom < th.edge_near;
        case RelationId::near_back_edge: return 1.0 - g[0].bb.top < th.edge_near;
        case RelationId::near_left_edge: return g[0].bb.left < th.edge_near;
        case RelationId::near_right_edge: return 1.0 - g[0].bb.right < th.edge_near;
        case RelationId::front_half: return g[0].bb.top < 0.5;
        case RelationId::back_half: return g[0].bb.bottom > 0.5;
        case RelationId::left_half: return g[0].bb.right < 0.5;
        case RelationId::right_half: return g[0].bb.left > 0.5;
        case RelationId::central_column: return g[0].x > 0.25 && g[0].x < 0.75;
        case RelationId::central_row: return g[0].y > 0.25 && g[0].y < 0.75;
        case RelationId::centered_table: return hypot2(g[0].x - 0.5, g[0].y - 0.5) < th.center_tol;
        case RelationId::horizontally_aligned: return horizontally_aligned(g[0], g[1], th);
        case RelationId::vertically_aligned: return vertically_aligned(g[0], g[1], th);
        case RelationId::horizontal_symmetry_on_table:
            return hypot2(g[0].x - g[1].x, g[0].y - (1.0 - g[1].y)) < th.center_tol;
        case RelationId::vertical_symmetry_on_table:
            return hypot2(g[0].x - (1.0 - g[1].x), g[0].y - g[1].y) < th.center_tol;
        case RelationId::left_of: return left_of(g[0], g[1], th);
        case RelationId::right_of:
            return std::abs(g[0].bb.left - g[1].bb.right) < th.align_tol && substantial_y_overlap(g[0], g[1], th);
        case RelationId::centered: return hypot2(g[0].x - g[1].x, g[0].y - g[1].y) < th.center_tol;
        case RelationId::on_top_of: {
            if (g[1].area < g[0].area) {
                return false;
            }
            for (const Vec2& c : g[0].box.corners()) {
                if (!contains(g[1].box, c, 1e-12)) {
                    return false;
                }
            }
            return true;
        }
        case RelationId::vertical_line_symmetry:
            return hypot2(g[1].x - (2.0 * g[0].x - g[2].x), g[1].y - g[2].y) < th.center_tol;
        case RelationId::horizontal_line_symmetry:
            return hypot2(g[1].x - g[2].x, g[1].y - (2.0 * g[0].y - g[2].y)) < th.center_tol;
        case RelationId::aligned_in_horizontal_line: return aligned_line(g, th, true);
        case RelationId::aligned_in_vertical_line: return aligned_line(g, th, false);
        case RelationId::regular_grid: return regular_grid(g, th);
        case RelationId::sorted: return sorted_by_width(g, th);
    }
    throw UnsupportedRelation("unsupported relation");
}

std::vector<ObjGeom> geoms_for(const std::vector<size_t>& idx, const std::vector<ObjGeom>& all) {
    std::vector<ObjGeom> out;
    out.reserve(idx.size());
    for (size_t i : idx) {
        out.push_back(all[i]);
    }
    return out;
}

// Greedy maximal runs for line-like variable-arity relations: cluster on
// `key`, order each cluster along `along`, extend runs while the classifier
// holds.
void annotate_runs(RelationId rel, const Scene& scene, const std::vector<ObjGeom>& all, const Thresholds& th,
                   double (*key)(const ObjGeom&), double (*along)(const ObjGeom&), GroundGraph& out) {
    std::vector<double> keys;
    for (const auto& g : all) {
        keys.push_back(key(g));
    }
    size_t n_clusters = 0;
    const auto label = cluster_1d(keys, th.align_tol, n_clusters);
    for (size_t c = 0; c < n_clusters; ++c) {
        std::vector<size_t> members;
        for (size_t i = 0; i < all.size(); ++i) {
            if (label[i] == c) {
                members.push_back(i);
            }
        }
        if (members.size() < kMinGroupSize) {
            continue;
        }
        std::stable_sort(members.begin(), members.end(),
                         [&](size_t a, size_t b) { return along(all[a]) < along(all[b]); });
        size_t start = 0;
        while (start + kMinGroupSize <= members.size()) {
            size_t end = start + kMinGroupSize;  // exclusive
            auto run_ok = [&](size_t e) {
                const std::vector<size_t> run(members.begin() + static_cast<long>(start),
                                              members.begin() + static_cast<long>(e));
                return classify_geoms(rel, geoms_for(run, all), th);
            };
            if (!run_ok(end)) {
                ++start;
                continue;
            }
            while (end < members.size() && run_ok(end + 1)) {
                ++end;
            }
            GroundAtom atom{rel, {}};
            for (size_t k = start; k < end; ++k) {
                atom.args.push_back(scene.objects[members[k]].name);
            }
            out.add(std::move(atom));
            start = end;
        }
    }
}

void annotate_grids(const Scene& scene, const std::vector<ObjGeom>& all, const Thresholds& th, GroundGraph& out) {
    std::vector<bool> used(all.size(), false);
    while (true) {
        std::vector<size_t> free_idx;
        for (size_t i = 0; i < all.size(); ++i) {
            if (!used[i]) {
                free_idx.push_back(i);
            }
        }
        if (free_idx.size() < kMinGroupSize) {
            return;
        }
        std::vector<double> xs, ys;
        for (size_t i : free_idx) {
            xs.push_back(all[i].x);
            ys.push_back(all[i].y);
        }
        size_t n_rows = 0, n_cols = 0;
        const auto row = cluster_1d(ys, th.align_tol, n_rows);
        const auto col = cluster_1d(xs, th.align_tol, n_cols);
        std::map<std::pair<size_t, size_t>, std::vector<size_t>> cell;
        for (size_t k = 0; k < free_idx.size(); ++k) {
            cell[{row[k], col[k]}].push_back(free_idx[k]);
        }
        std::vector<size_t> best;
        for (size_t r0 = 0; r0 < n_rows; ++r0) {
            for (size_t r1 = r0; r1 < n_rows; ++r1) {
                for (size_t c0 = 0; c0 < n_cols; ++c0) {
                    for (size_t c1 = c0; c1 < n_cols; ++c1) {
                        const size_t count = (r1 - r0 + 1) * (c1 - c0 + 1);
                        if (count < kMinGroupSize || count <= best.size()) {
                            continue;
                        }
                        std::vector<size_t> members;
                        bool full = true;
                        for (size_t r = r0; r <= r1 && full; ++r) {
                            for (size_t c = c0; c <= c1; ++c) {
                                auto it = cell.find({r, c});
                                if (it == cell.end() || it->second.size() != 1) {
                                    full = false;
                                    break;
                                }
                                members.push_back(it->second.front());
                            }
                        }
                        if (full && regular_grid(geoms_for(members, all), th)) {
                            best = std::move(members);
                        }
                    }
                }
            }
        }
        if (best.empty()) {
            return;
        }
        GroundAtom atom{RelationId::regular_grid, {}};
        for (size_t i : best) {
            atom.args.push_back(scene.objects[i].name);
            used[i] = true;
        }
        out.add(std::move(atom));
    }
}

}  // namespace

std::string_view relation_name(RelationId id) { return info(id).name; }

std::optional<RelationId> try_parse_relation(std::string_view name) {
    for (const auto& r : kRelations) {
        if (r.name == name) {
            return r.id;
        }
    }
    if (name == "central_table") {
        return RelationId::centered_table;
    }
    if (name == "horizontal_symmetry_about_axis_obj") {
        return RelationId::horizontal_line_symmetry;
    }
    if (name == "vertical_symmetry_about_axis_obj") {
        return RelationId::vertical_line_symmetry;
    }
    return std::nullopt;
}

RelationId parse_relation(std::string_view name) {
    if (auto id = try_parse_relation(name)) {
        return *id;
    }
    throw UnsupportedRelation("unsupported relation '" + std::string(name) + "'");
}

int arity(RelationId id) { return info(id).arity; }
bool is_variable_arity(RelationId id) { return info(id).arity == kVariableArity; }

bool is_symmetric(RelationId id) {
    switch (id) {
        case RelationId::horizontally_aligned:
        case RelationId::vertically_aligned:
        case RelationId::horizontal_symmetry_on_table:
        case RelationId::vertical_symmetry_on_table:
        case RelationId::centered: return true;
        default: return false;
    }
}

std::span<const RelationId> all_relations() { return kAllIds; }
std::span<const RelationId> library_relations() { return std::span<const RelationId>(kAllIds).first(24); }

void Thresholds::validate() const {
    const std::array<double, 6> vals{edge_near, align_tol, angle_tol, center_tol, overlap_frac, spacing_tol};
    for (double v : vals) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidInput("thresholds must be strictly positive");
        }
    }
    if (!(edge_near < 0.5)) {
        throw InvalidInput("edge_near must be below 0.5");
    }
    if (overlap_frac > 1.0) {
        throw InvalidInput("overlap_frac must lie in (0, 1]");
    }
}

std::string GroundAtom::to_string() const {
    std::ostringstream os;
    os << relation_name(relation) << '(';
    for (size_t i = 0; i < args.size(); ++i) {
        os << (i ? ", " : "") << args[i];
    }
    os << ')';
    return os.str();
}

GroundGraph::GroundGraph(std::vector<GroundAtom> atoms) {
    for (auto& a : atoms) {
        add(std::move(a));
    }
}

bool GroundGraph::add(GroundAtom atom) {
    if (contains(atom)) {
        return false;
    }
    atoms_.push_back(std::move(atom));
    return true;
}

bool GroundGraph::contains(const GroundAtom& atom) const {
    return std::find(atoms_.begin(), atoms_.end(), atom) != atoms_.end();
}

void GroundGraph::remove_at(size_t index) { atoms_.erase(atoms_.begin() + static_cast<long>(index)); }

std::optional<size_t> Scene::find(std::string_view name) const {
    for (size_t i = 0; i < objects.size(); ++i) {
        if (objects[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

size_t Scene::index_of(std::string_view name) const {
    if (auto i = find(name)) {
        return *i;
    }
    throw InvalidInput("unknown object '" + std::string(name) + "'");
}

void Scene::validate() const {
    table.validate();
    std::set<std::string> names;
    for (const auto& o : objects) {
        o.validate();
        if (!names.insert(o.name).second) {
            throw InvalidInput("duplicate object name '" + o.name + "'");
        }
    }
    if (poses && poses->size() != objects.size()) {
        throw InvalidInput("pose count does not match object count");
    }
}

void validate_atom(const GroundAtom& atom, const Scene& scene) {
    const int k = arity(atom.relation);
    if (k == kVariableArity) {
        if (atom.args.size() < kMinGroupSize) {
            throw InvalidInput(atom.to_string() + ": variable-arity relation needs at least 3 objects");
        }
    } else if (atom.args.size() != static_cast<size_t>(k)) {
        throw InvalidInput(atom.to_string() + ": expected " + std::to_string(k) + " arguments");
    }
    std::set<std::string_view> seen;
    for (const auto& a : atom.args) {
        if (!seen.insert(a).second) {
            throw InvalidInput(atom.to_string() + ": repeated argument '" + a + "'");
        }
        if (!scene.find(a)) {
            throw InvalidInput(atom.to_string() + ": unknown object '" + a + "'");
        }
    }
}

bool classify(const GroundAtom& atom, const Scene& scene, const Thresholds& th) {
    (void)info(atom.relation);
    if (!scene.poses) {
        throw InvalidInput("classify requires a scene with poses");
    }
    validate_atom(atom, scene);
    std::vector<ObjGeom> g;
    g.reserve(atom.args.size());
    for (const auto& name : atom.args) {
        g.push_back(geom_of(scene, scene.index_of(name)));
    }
    return classify_geoms(atom.relation, g, th);
}

GroundGraph annotate(const Scene& scene, const Thresholds& th) {
    if (!scene.poses) {
        throw InvalidInput("annotate requires a scene with poses");
    }
    const size_t n = scene.objects.size();
    std::vector<ObjGeom> all;
    all.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        all.push_back(geom_of(scene, i));
    }
    GroundGraph out;
    for (RelationId rel : all_relations()) {
        const int k = arity(rel);
        if (k == 1) {
            for (size_t i = 0; i < n; ++i) {
                if (classify_geoms(rel, {all[i]}, th)) {
                    out.add({rel, {scene.objects[i].name}});
                }
            }
        } else if (k == 2) {
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = 0; j < n; ++j) {
                    if (i != j && classify_geoms(rel, {all[i], all[j]}, th)) {
                        out.add({rel, {scene.objects[i].name, scene.objects[j].name}});
                    }
                }
            }
        } else if (k == 3) {
            for (size_t a = 0; a < n; ++a) {
                for (size_t i = 0; i < n; ++i) {
                    for (size_t j = i + 1; j < n; ++j) {
                        if (i == a || j == a) {
                            continue;
                        }
                        if (classify_geoms(rel, {all[a], all[i], all[j]}, th)) {
                            out.add({rel, {scene.objects[a].name, scene.objects[i].name, scene.objects[j].name}});
                        }
                    }
                }
            }
        }
    }
    auto bottom = +[](const ObjGeom& g) { return g.bb.bottom; };
    auto cx = +[](const ObjGeom& g) { return g.x; };
    auto cy = +[](const ObjGeom& g) { return g.y; };
    annotate_runs(RelationId::aligned_in_horizontal_line, scene, all, th, bottom, cx, out);
    annotate_runs(RelationId::aligned_in_vertical_line, scene, all, th, cx, cy, out);
    annotate_grids(scene, all, th, out);
    annotate_runs(RelationId::sorted, scene, all, th, bottom, cx, out);
    return out;
}

namespace {

struct Exclusion {
    RelationId a;
    RelationId b;
    bool swapped_args;  // binary: the second atom has (B, A)
};

// Unary exclusions apply to the same object; binary exclusions to the same
// ordered pair (or its reverse when swapped_args is set).
constexpr std::array<Exclusion, 4> kUnaryExclusions{{
    {RelationId::left_half, RelationId::right_half, false},
    {RelationId::front_half, RelationId::back_half, false},
    {RelationId::near_left_edge, RelationId::near_right_edge, false},
    {RelationId::near_front_edge, RelationId::near_back_edge, false},
}};

constexpr std::array<Exclusion, 4> kBinaryExclusions{{
    {RelationId::left_of, RelationId::right_of, false},
    {RelationId::left_of, RelationId::left_of, true},
    {RelationId::right_of, RelationId::right_of, true},
    {RelationId::on_top_of, RelationId::on_top_of, true},
}};

bool excluded(const GroundAtom& x, const GroundAtom& y) {
    if (x.args.size() == 1 && y.args.size() == 1) {
        if (x.args[0] != y.args[0]) {
            return false;
        }
        for (const auto& e : kUnaryExclusions) {
            if ((x.relation == e.a && y.relation == e.b) || (x.relation == e.b && y.relation == e.a)) {
                return true;
            }
        }
        return false;
    }
    if (x.args.size() != 2 || y.args.size() != 2 || arity(x.relation) != 2 || arity(y.relation) != 2) {
        return false;
    }
    for (const auto& e : kBinaryExclusions) {
        const bool rel_match = (x.relation == e.a && y.relation == e.b) || (x.relation == e.b && y.relation == e.a);
        if (!rel_match) {
            continue;
        }
        const bool same = x.args[0] == y.args[0] && x.args[1] == y.args[1];
        const bool reversed = x.args[0] == y.args[1] && x.args[1] == y.args[0];
        if ((e.swapped_args && reversed) || (!e.swapped_args && same)) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<Conflict> check_conflicts(const GroundGraph& graph, const Scene& scene) {
    (void)scene;
    std::vector<Conflict> out;
    const auto& atoms = graph.atoms();
    for (size_t i = 0; i < atoms.size(); ++i) {
        for (size_t j = i + 1; j < atoms.size(); ++j) {
            if (excluded(atoms[i], atoms[j])) {
                out.push_back(Conflict{atoms[i], atoms[j], i, j,
                                       atoms[i].to_string() + " conflicts with " + atoms[j].to_string()});
            }
        }
    }
    return out;
}

std::vector<std::string> check_completeness(const GroundGraph& graph, const Scene& scene) {
    std::set<std::string_view> mentioned;
    for (const auto& atom : graph.atoms()) {
        for (const auto& a : atom.args) {
            mentioned.insert(a);
        }
    }
    std::vector<std::string> out;
    for (const auto& o : scene.objects) {
        if (!mentioned.contains(o.name)) {
            out.push_back(o.name);
        }
    }
    return out;
}

}  // namespace form
