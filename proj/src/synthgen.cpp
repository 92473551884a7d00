#include "form/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace form {

namespace {

// Axis-aligned half extents of a rotated box.
struct Extent {
    double ex = 0.0;
    double ey = 0.0;
};

Extent extent(const ShapeDims& d, double theta) {
    const double c = std::abs(std::cos(theta));
    const double s = std::abs(std::sin(theta));
    return Extent{c * 0.5 * d[0] + s * 0.5 * d[1], s * 0.5 * d[0] + c * 0.5 * d[1]};
}

double draw_theta(Rng& rng, const Thresholds& th) {
    if (uniform(rng, 0.0, 1.0) < 0.8) {
        return 0.0;
    }
    return uniform(rng, -th.angle_tol, th.angle_tol);
}

// Uniform draw on [lo, hi]; an empty interval signals a failed attempt.
struct Draw {
    Rng& rng;
    bool ok = true;

    double operator()(double lo, double hi) {
        if (!(hi >= lo)) {
            ok = false;
            return lo;
        }
        return hi > lo ? uniform(rng, lo, hi) : lo;
    }

    std::pair<double, double> disk(double radius) {
        const double r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
        const double a = uniform(rng, -kPi, kPi);
        return {r * std::cos(a), r * std::sin(a)};
    }
};

// Uniform centroid keeping the box on the table.
Pose anywhere(Draw& d, const ShapeDims& s, double theta) {
    const Extent e = extent(s, theta);
    return Pose{d(e.ex, 1.0 - e.ex), d(e.ey, 1.0 - e.ey), theta};
}

bool on_table(const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses) {
    for (size_t i = 0; i < poses.size(); ++i) {
        const Extent e = extent(shapes[i], poses[i].theta);
        const Pose& p = poses[i];
        if (p.x - e.ex < -1e-12 || p.x + e.ex > 1.0 + 1e-12 || p.y - e.ey < -1e-12 || p.y + e.ey > 1.0 + 1e-12) {
            return false;
        }
    }
    return true;
}

bool any_overlap(const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses) {
    const TableFrame unit{1.0, 1.0};
    std::vector<OrientedBox> boxes;
    for (size_t i = 0; i < poses.size(); ++i) {
        boxes.push_back(to_oriented_box(ObjectShape{"o", "", shapes[i][0], shapes[i][1]}, poses[i], unit));
    }
    for (size_t i = 0; i < boxes.size(); ++i) {
        for (size_t j = i + 1; j < boxes.size(); ++j) {
            if (overlap(boxes[i], boxes[j])) {
                return true;
            }
        }
    }
    return false;
}

bool overlap_allowed(RelationId rel) { return rel == RelationId::centered || rel == RelationId::on_top_of; }

// Positions along a line: returns offsets of each centroid from the first,
// with equal nominal pitch and jitter of +-0.4 spacing_tol, or empty when
// the group does not fit into `room`.
std::vector<double> line_offsets(Draw& d, const std::vector<double>& half, double min_pitch, double room,
                                 const Thresholds& th) {
    const size_t n = half.size();
    double pitch_lo = min_pitch;
    for (size_t k = 0; k + 1 < n; ++k) {
        pitch_lo = std::max(pitch_lo, half[k] + half[k + 1] + 0.01 + 0.4 * th.spacing_tol);
    }
    const double jit = 0.4 * th.spacing_tol;
    const double pitch_hi = (room - half.front() - half.back()) / static_cast<double>(n - 1) - jit;
    const double pitch = d(pitch_lo, std::min(pitch_hi, 2.5 * pitch_lo));
    std::vector<double> out(n, 0.0);
    for (size_t k = 1; k < n; ++k) {
        out[k] = out[k - 1] + pitch + d(-jit, jit);
    }
    return out;
}

std::vector<Pose> construct(RelationId rel, const std::vector<ShapeDims>& s, Rng& rng, const Thresholds& th,
                            bool& ok) {
    Draw d{rng};
    const size_t n = s.size();
    std::vector<Pose> p(n);
    const double a = th.align_tol;
    const double e = th.edge_near;
    auto fresh = [&](size_t i) {
        const double theta = draw_theta(rng, th);
        p[i] = anywhere(d, s[i], theta);
        return extent(s[i], theta);
    };
    switch (rel) {
        case RelationId::near_front_edge: {
            const Extent x = fresh(0);
            p[0].y = d(0.0, 0.999 * e) + x.ey;
            break;
        }
        case RelationId::near_back_edge: {
            const Extent x = fresh(0);
            p[0].y = 1.0 - d(0.0, 0.999 * e) - x.ey;
            break;
        }
        case RelationId::near_left_edge: {
            const Extent x = fresh(0);
            p[0].x = d(0.0, 0.999 * e) + x.ex;
            break;
        }
        case RelationId::near_right_edge: {
            const Extent x = fresh(0);
            p[0].x = 1.0 - d(0.0, 0.999 * e) - x.ex;
            break;
        }
        case RelationId::front_half: {
            const Extent x = fresh(0);
            p[0].y = d(x.ey, 0.499 - x.ey);
            break;
        }
        case RelationId::back_half: {
            const Extent x = fresh(0);
            p[0].y = d(0.501 + x.ey, 1.0 - x.ey);
            break;
        }
        case RelationId::left_half: {
            const Extent x = fresh(0);
            p[0].x = d(x.ex, 0.499 - x.ex);
            break;
        }
        case RelationId::right_half: {
            const Extent x = fresh(0);
            p[0].x = d(0.501 + x.ex, 1.0 - x.ex);
            break;
        }
        case RelationId::central_column: {
            const Extent x = fresh(0);
            p[0].x = d(std::max(0.251, x.ex), std::min(0.749, 1.0 - x.ex));
            break;
        }
        case RelationId::central_row: {
            const Extent x = fresh(0);
            p[0].y = d(std::max(0.251, x.ey), std::min(0.749, 1.0 - x.ey));
            break;
        }
        case RelationId::centered_table: {
            fresh(0);
            const auto [dx, dy] = d.disk(0.95 * th.center_tol);
            p[0].x = 0.5 + dx;
            p[0].y = 0.5 + dy;
            break;
        }
        case RelationId::horizontally_aligned: {
            const Extent xa = fresh(0);
            const Extent xb = fresh(1);
            p[1].theta = p[0].theta;
            const Extent xb2 = extent(s[1], p[0].theta);
            (void)xb;
            p[1].y = (p[0].y - xa.ey) + d(-0.9 * a, 0.9 * a) + xb2.ey;
            p[1].x = d(xb2.ex, 1.0 - xb2.ex);
            break;
        }
        case RelationId::vertically_aligned: {
            fresh(0);
            p[1] = anywhere(d, s[1], p[0].theta);
            p[1].x = p[0].x + d(-0.9 * a, 0.9 * a);
            break;
        }
        case RelationId::horizontal_symmetry_on_table:
        case RelationId::vertical_symmetry_on_table: {
            fresh(0);
            fresh(1);
            const auto [dx, dy] = d.disk(0.9 * th.center_tol);
            const bool horiz = rel == RelationId::horizontal_symmetry_on_table;
            p[1].x = (horiz ? p[0].x : 1.0 - p[0].x) + dx;
            p[1].y = (horiz ? 1.0 - p[0].y : p[0].y) + dy;
            break;
        }
        case RelationId::left_of:
        case RelationId::right_of: {
            // Build "first sits left of second" and swap roles for right_of.
            const size_t l = rel == RelationId::left_of ? 0 : 1;
            const size_t r = 1 - l;
            const Extent xl = fresh(l);
            const Extent xr = fresh(r);
            const double hl = 2.0 * xl.ey;
            const double hr = 2.0 * xr.ey;
            const double dmax = 0.5 * (hl + hr) - th.overlap_frac * std::min(hl, hr);
            p[l].x = d(xl.ex, 1.0 - xl.ex - 2.0 * xr.ex - a);
            p[r].x = p[l].x + xl.ex + d(0.0, 0.9 * a) + xr.ex;
            p[r].y = p[l].y + d(-0.9 * dmax, 0.9 * dmax);
            break;
        }
        case RelationId::centered: {
            fresh(0);
            fresh(1);
            const auto [dx, dy] = d.disk(0.9 * th.center_tol);
            p[1].x = p[0].x + dx;
            p[1].y = p[0].y + dy;
            break;
        }
        case RelationId::on_top_of: {
            fresh(1);
            // Place the top object axis-parallel to the support, turned a
            // quarter when that is the only way it fits.
            const double hxa = 0.5 * s[0][0], hya = 0.5 * s[0][1];
            const double hxb = 0.5 * s[1][0], hyb = 0.5 * s[1][1];
            const bool straight = hxa <= hxb && hya <= hyb;
            const bool turned = hya <= hxb && hxa <= hyb;
            if (!straight && !turned) {
                ok = false;
                break;
            }
            const bool quarter = !straight;
            const double ux = quarter ? hya : hxa;
            const double uy = quarter ? hxa : hya;
            const double du = d(-0.9 * (hxb - ux), 0.9 * (hxb - ux));
            const double dv = d(-0.9 * (hyb - uy), 0.9 * (hyb - uy));
            const double c = std::cos(p[1].theta), sn = std::sin(p[1].theta);
            p[0].theta = wrap_angle(p[1].theta + (quarter ? kPi / 2.0 : 0.0));
            p[0].x = p[1].x + c * du - sn * dv;
            p[0].y = p[1].y + sn * du + c * dv;
            break;
        }
        case RelationId::vertical_line_symmetry:
        case RelationId::horizontal_line_symmetry: {
            fresh(0);
            fresh(1);
            fresh(2);
            const auto [dx, dy] = d.disk(0.9 * th.center_tol);
            if (rel == RelationId::vertical_line_symmetry) {
                p[2].x = 2.0 * p[0].x - p[1].x + dx;
                p[2].y = p[1].y + dy;
            } else {
                p[2].x = p[1].x + dx;
                p[2].y = 2.0 * p[0].y - p[1].y + dy;
            }
            break;
        }
        case RelationId::aligned_in_horizontal_line:
        case RelationId::aligned_in_vertical_line: {
            const bool horiz = rel == RelationId::aligned_in_horizontal_line;
            const double theta = draw_theta(rng, th);
            std::vector<double> along_half, across_half;
            for (size_t i = 0; i < n; ++i) {
                const Extent x = extent(s[i], theta);
                along_half.push_back(horiz ? x.ex : x.ey);
                across_half.push_back(horiz ? x.ey : x.ex);
            }
            const auto off = line_offsets(d, along_half, a + 0.01, 1.0, th);
            const double start = d(along_half.front(), 1.0 - along_half.back() - off.back());
            const double max_across = *std::max_element(across_half.begin(), across_half.end());
            // Shared key: front coordinate for horizontal lines, centroid x
            // for vertical ones.
            const double key = horiz ? d(0.4 * a, 1.0 - 2.0 * max_across - 0.4 * a)
                                     : d(max_across + 0.4 * a, 1.0 - max_across - 0.4 * a);
            for (size_t i = 0; i < n; ++i) {
                const double along = start + off[i];
                const double k = key + d(-0.4 * a, 0.4 * a);
                p[i] = horiz ? Pose{along, k + across_half[i], theta} : Pose{k, along, theta};
            }
            break;
        }
        case RelationId::regular_grid: {
            const auto [rows, cols] = grid_shape(n);
            const double theta = draw_theta(rng, th);
            double max_ex = 0.0, max_ey = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const Extent x = extent(s[i], theta);
                max_ex = std::max(max_ex, x.ex);
                max_ey = std::max(max_ey, x.ey);
            }
            const double jit = 0.2 * a;
            auto pitch = [&](size_t count, double half) {
                const double lo = std::max(2.0 * half + 0.01 + 2.0 * jit, 3.0 * a);
                if (count == 1) {
                    return lo;
                }
                const double hi = (1.0 - 2.0 * half - 2.0 * jit) / static_cast<double>(count - 1);
                return d(lo, std::min(hi, 2.5 * lo));
            };
            const double px = pitch(cols, max_ex);
            const double py = pitch(rows, max_ey);
            const double x0 = d(max_ex + jit, 1.0 - max_ex - jit - px * static_cast<double>(cols - 1));
            const double y0 = d(max_ey + jit, 1.0 - max_ey - jit - py * static_cast<double>(rows - 1));
            for (size_t r = 0; r < rows; ++r) {
                for (size_t c = 0; c < cols; ++c) {
                    p[r * cols + c] = Pose{x0 + px * static_cast<double>(c) + d(-jit, jit),
                                           y0 + py * static_cast<double>(r) + d(-jit, jit), theta};
                }
            }
            break;
        }
        case RelationId::sorted: {
            std::vector<size_t> order(n);
            std::iota(order.begin(), order.end(), size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return s[i][1] > s[j][1]; });
            const double theta = draw_theta(rng, th);
            double total = 0.0, max_h = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const Extent x = extent(s[i], theta);
                total += 2.0 * x.ex;
                max_h = std::max(max_h, 2.0 * x.ey);
            }
            std::vector<double> gaps(n, 0.0);
            for (size_t k = 1; k < n; ++k) {
                gaps[k] = d(0.0, 0.8 * a);
                total += gaps[k];
            }
            double x = d(0.0, 1.0 - total);
            const double bottom = d(0.3 * a, 1.0 - max_h - 0.3 * a);
            for (size_t k = 0; k < n; ++k) {
                const size_t i = order[k];
                const Extent ext = extent(s[i], theta);
                x += gaps[k];
                p[i] = Pose{x + ext.ex, bottom + d(-0.3 * a, 0.3 * a) + ext.ey, theta};
                x += 2.0 * ext.ex;
            }
            break;
        }
    }
    ok = ok && d.ok;
    return p;
}

std::vector<ShapeDims> jittered(const ShapeDims& base, size_t count, double jitter, Rng& rng) {
    std::vector<ShapeDims> out;
    for (size_t i = 0; i < count; ++i) {
        out.push_back({base[0] * uniform(rng, 1.0 - jitter, 1.0 + jitter),
                       base[1] * uniform(rng, 1.0 - jitter, 1.0 + jitter)});
    }
    return out;
}

}  // namespace

void ShapeDistribution::validate() const {
    for (const auto& [lo, hi] : {length_range, width_range}) {
        if (!(lo > 0.0) || !(lo <= hi) || !(hi < 1.0)) {
            throw InvalidInput("shape ranges must satisfy 0 < min <= max < 1");
        }
    }
    if (!(aspect_jitter >= 0.0) || !(aspect_jitter < 1.0)) {
        throw InvalidInput("aspect jitter must lie in [0, 1)");
    }
}

Scene unit_scene(const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses) {
    Scene scene;
    scene.table = TableFrame{1.0, 1.0};
    for (size_t i = 0; i < shapes.size(); ++i) {
        scene.objects.push_back(ObjectShape{"o" + std::to_string(i), "object", shapes[i][0], shapes[i][1]});
    }
    scene.poses = poses;
    return scene;
}

GroundAtom unit_atom(RelationId rel, size_t count) {
    GroundAtom atom{rel, {}};
    for (size_t i = 0; i < count; ++i) {
        atom.args.push_back("o" + std::to_string(i));
    }
    return atom;
}

std::vector<Pose> sample_relation(RelationId rel, const std::vector<ShapeDims>& shapes, uint64_t seed,
                                  const Thresholds& th) {
    const int k = arity(rel);
    if ((k == kVariableArity && shapes.size() < kMinGroupSize) ||
        (k != kVariableArity && shapes.size() != static_cast<size_t>(k))) {
        throw InvalidInput(std::string(relation_name(rel)) + ": shape count incompatible with arity");
    }
    for (const auto& sd : shapes) {
        if (!(sd[0] > 0.0) || !(sd[1] > 0.0) || !(sd[0] < 1.0) || !(sd[1] < 1.0)) {
            throw InvalidInput("normalized shape dimensions must lie in (0, 1)");
        }
    }
    const GroundAtom atom = unit_atom(rel, shapes.size());
    Rng rng(splitmix64(seed));
    for (size_t attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
        bool ok = true;
        std::vector<Pose> poses = construct(rel, shapes, rng, th, ok);
        if (!ok) {
            continue;
        }
        for (auto& p : poses) {
            p.theta = wrap_angle(p.theta);
        }
        if (!on_table(shapes, poses)) {
            continue;
        }
        if (!overlap_allowed(rel) && any_overlap(shapes, poses)) {
            continue;
        }
        if (classify(atom, unit_scene(shapes, poses), th)) {
            return poses;
        }
    }
    throw UnsatisfiableSample(std::string(relation_name(rel)) + ": no satisfying placement after " +
                              std::to_string(kMaxSampleAttempts) + " attempts");
}

std::vector<ShapeDims> draw_shapes(RelationId rel, size_t count, const ShapeDistribution& dist, Rng& rng) {
    auto one = [&] {
        return ShapeDims{uniform(rng, dist.length_range.first, dist.length_range.second),
                         uniform(rng, dist.width_range.first, dist.width_range.second)};
    };
    if (rel == RelationId::on_top_of) {
        const ShapeDims base = one();
        const ShapeDims top{base[0] * uniform(rng, 0.4, 0.8), base[1] * uniform(rng, 0.4, 0.8)};
        return {top, base};
    }
    if (is_variable_arity(rel) && rel != RelationId::sorted) {
        return jittered(one(), count, dist.aspect_jitter, rng);
    }
    std::vector<ShapeDims> out;
    for (size_t i = 0; i < count; ++i) {
        out.push_back(one());
    }
    return out;
}

std::pair<size_t, size_t> default_arity_range(RelationId rel) {
    const int k = arity(rel);
    if (k == kVariableArity) {
        return {3, 5};
    }
    return {static_cast<size_t>(k), static_cast<size_t>(k)};
}

std::vector<RelationSample> gen_dataset(RelationId rel, size_t n, const ShapeDistribution& dist,
                                        std::pair<size_t, size_t> arity_range, uint64_t seed, const Thresholds& th,
                                        unsigned threads) {
    if (n == 0) {
        throw InvalidInput("dataset size must be positive");
    }
    dist.validate();
    th.validate();
    const int k = arity(rel);
    if (arity_range.first > arity_range.second) {
        throw InvalidInput("arity range is empty");
    }
    if (k == kVariableArity ? arity_range.first < kMinGroupSize
                            : (arity_range.first != static_cast<size_t>(k) || arity_range.second != arity_range.first)) {
        throw InvalidInput(std::string(relation_name(rel)) + ": arity range incompatible with relation");
    }
    std::vector<RelationSample> out(n);
    auto make = [&](size_t i) {
        Rng rng = stream_rng(seed, i);
        const size_t count = std::uniform_int_distribution<size_t>(arity_range.first, arity_range.second)(rng);
        RelationSample s;
        s.relation = rel;
        s.shapes = draw_shapes(rel, count, dist, rng);
        s.poses = sample_relation(rel, s.shapes, rng(), th);
        out[i] = std::move(s);
    };
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<size_t>(threads, n));
    if (threads <= 1) {
        for (size_t i = 0; i < n; ++i) {
            make(i);
        }
        return out;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (size_t i = w; i < n; i += threads) {
                    make(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return out;
}

std::string to_json_line(const RelationSample& s) {
    nlohmann::json j;
    j["relation"] = std::string(relation_name(s.relation));
    j["shapes"] = nlohmann::json::array();
    for (const auto& d : s.shapes) {
        j["shapes"].push_back({d[0], d[1]});
    }
    j["poses"] = nlohmann::json::array();
    for (const auto& p : s.poses) {
        j["poses"].push_back({p.x, p.y, p.theta});
    }
    return j.dump();
}

RelationSample sample_from_json_line(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed dataset record: ") + e.what());
    }
    try {
        RelationSample s;
        s.relation = parse_relation(j.at("relation").get<std::string>());
        for (const auto& d : j.at("shapes")) {
            if (d.size() != 2) {
                throw InvalidInput("shape entries need [length, width]");
            }
            s.shapes.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
        }
        for (const auto& p : j.at("poses")) {
            if (p.size() != 3) {
                throw InvalidInput("pose entries need [x, y, theta]");
            }
            s.poses.push_back(Pose{p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
        }
        if (s.shapes.size() != s.poses.size()) {
            throw InvalidInput("shape and pose counts differ in dataset record");
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed dataset record: ") + e.what());
    }
}

void write_dataset(const std::string& path, const std::vector<RelationSample>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    for (const auto& s : data) {
        out << to_json_line(s) << '\n';
    }
}

std::vector<RelationSample> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot read dataset " + path);
    }
    std::vector<RelationSample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        out.push_back(sample_from_json_line(line));
    }
    return out;
}

}  // namespace form
