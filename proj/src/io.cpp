#include "form/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "form/eval.hpp"

namespace form {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed ") + what + ": " + e.what());
    }
}

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw InvalidInput(std::string("missing numeric field '") + key + "'");
    return j[key].get<double>();
}

std::string text(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw InvalidInput(std::string("missing string field '") + key + "'");
    return j[key].get<std::string>();
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const char* what) {
    if (!j.is_object()) throw InvalidInput(std::string(what) + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw InvalidInput(std::string("unknown field '") + k + "' in " + what);
        }
    }
}

GroundGraph graph_from_json(const json& j) {
    if (!j.is_array()) throw InvalidInput("graph must be a list of relation lists");
    GroundGraph g;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() < 2) throw InvalidInput("graph entry must be [relation, object, ...]");
        GroundAtom a;
        for (size_t i = 0; i < e.size(); ++i) {
            if (!e[i].is_string()) throw InvalidInput("graph entries must be strings");
            if (i == 0) {
                const auto rel = try_parse_relation(e[0].get<std::string>());
                if (!rel) throw InvalidInput("unknown relation '" + e[0].get<std::string>() + "'");
                a.relation = *rel;
            } else {
                a.args.push_back(e[i].get<std::string>());
            }
        }
        g.add(std::move(a));
    }
    return g;
}

ordered_json graph_to_json(const GroundGraph& g) {
    ordered_json list = ordered_json::array();
    for (const auto& a : g.atoms()) {
        ordered_json e = ordered_json::array({std::string(relation_name(a.relation))});
        for (const auto& arg : a.args) e.push_back(arg);
        list.push_back(e);
    }
    return list;
}

ordered_json pose_json(const Pose& p) { return ordered_json{{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

Pose pose_from_json(const json& j) {
    check_keys(j, {"x", "y", "theta", "name"}, "pose");
    Pose p{number(j, "x"), number(j, "y"), number(j, "theta")};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.theta)) {
        throw InvalidInput("pose components must be finite");
    }
    return p;
}

}  // namespace

SceneFile parse_scene(const std::string& text_in) {
    const json j = parse_json(text_in, "scene");
    check_keys(j, {"table", "objects", "instruction", "family", "reference_graph"}, "scene");
    SceneFile f;
    if (!j.contains("table")) throw InvalidInput("scene needs a table");
    check_keys(j["table"], {"length", "width"}, "table");
    f.scene.table = {number(j["table"], "length"), number(j["table"], "width")};
    if (!j.contains("objects") || !j["objects"].is_array()) throw InvalidInput("scene needs an objects list");
    std::vector<Pose> poses;
    size_t with_pose = 0;
    for (const auto& o : j["objects"]) {
        check_keys(o, {"name", "category", "length", "width", "pose"}, "object");
        ObjectShape s;
        s.name = text(o, "name");
        s.category = o.contains("category") ? text(o, "category") : base_type(s.name);
        s.length = number(o, "length");
        s.width = number(o, "width");
        f.scene.objects.push_back(s);
        if (o.contains("pose")) {
            poses.push_back(pose_from_json(o["pose"]));
            ++with_pose;
        }
    }
    if (with_pose != 0 && with_pose != f.scene.objects.size()) {
        throw InvalidInput("either every object has a pose or none does");
    }
    if (with_pose > 0) f.scene.poses = poses;
    if (j.contains("instruction")) f.scene.instruction = text(j, "instruction");
    if (j.contains("family")) f.family = parse_family(text(j, "family"));
    if (j.contains("reference_graph")) f.reference = graph_from_json(j["reference_graph"]);
    f.scene.validate();
    if (f.reference) {
        for (const auto& a : f.reference->atoms()) validate_atom(a, f.scene);
    }
    return f;
}

std::string serialize_scene(const SceneFile& f) {
    ordered_json j;
    if (f.family) j["family"] = std::string(family_name(*f.family));
    if (f.scene.instruction) j["instruction"] = *f.scene.instruction;
    j["table"] = {{"length", f.scene.table.length}, {"width", f.scene.table.width}};
    j["objects"] = ordered_json::array();
    for (size_t i = 0; i < f.scene.objects.size(); ++i) {
        const auto& o = f.scene.objects[i];
        ordered_json e{{"name", o.name}, {"category", o.category}, {"length", o.length}, {"width", o.width}};
        if (f.scene.poses) e["pose"] = pose_json((*f.scene.poses)[i]);
        j["objects"].push_back(e);
    }
    if (f.reference) j["reference_graph"] = graph_to_json(*f.reference);
    return j.dump(2) + "\n";
}

SceneFile read_scene(const std::string& path) { return parse_scene(read_text_file(path)); }
void write_scene(const std::string& path, const SceneFile& f) { write_text_file(path, serialize_scene(f)); }

GroundGraph parse_graph(const std::string& t) { return graph_from_json(parse_json(t, "graph")); }

std::string serialize_graph(const GroundGraph& g) {
    // One atom per line keeps graph files diff-friendly.
    std::string out = "[\n";
    const auto list = graph_to_json(g);
    for (size_t i = 0; i < list.size(); ++i) {
        out += "  " + list[i].dump() + (i + 1 < list.size() ? ",\n" : "\n");
    }
    return out + "]\n";
}

GroundGraph read_graph(const std::string& path) { return parse_graph(read_text_file(path)); }
void write_graph(const std::string& path, const GroundGraph& g) { write_text_file(path, serialize_graph(g)); }

size_t select_best(const std::vector<ScoredSample>& samples) {
    size_t best = 0;
    for (size_t i = 1; i < samples.size(); ++i) {
        const auto& a = samples[i];
        const auto& b = samples[best];
        if (a.feasibility > b.feasibility || (a.feasibility == b.feasibility && a.satisfaction > b.satisfaction)) {
            best = i;
        }
    }
    return best;
}

SolveResult parse_result(const std::string& t) {
    const json j = parse_json(t, "result");
    check_keys(j, {"objects", "samples", "best", "warnings"}, "result");
    SolveResult r;
    if (!j.contains("objects") || !j["objects"].is_array()) throw InvalidInput("result needs an objects list");
    for (const auto& n : j["objects"]) {
        if (!n.is_string()) throw InvalidInput("object names must be strings");
        r.names.push_back(n.get<std::string>());
    }
    if (!j.contains("samples") || !j["samples"].is_array()) throw InvalidInput("result needs a samples list");
    for (const auto& s : j["samples"]) {
        check_keys(s, {"poses", "feasibility", "satisfaction", "best"}, "sample");
        ScoredSample out;
        out.feasibility = number(s, "feasibility");
        out.satisfaction = number(s, "satisfaction");
        if (!s.contains("poses") || !s["poses"].is_array()) throw InvalidInput("sample needs poses");
        for (const auto& p : s["poses"]) out.poses.push_back(pose_from_json(p));
        if (out.poses.size() != r.names.size()) throw InvalidInput("sample pose count does not match objects");
        r.samples.push_back(std::move(out));
    }
    if (r.samples.empty()) throw InvalidInput("result has no samples");
    r.best = static_cast<size_t>(number(j, "best"));
    if (r.best >= r.samples.size()) throw InvalidInput("best sample index out of range");
    if (j.contains("warnings")) {
        for (const auto& w : j["warnings"]) r.warnings.push_back(w.get<std::string>());
    }
    return r;
}

std::string serialize_result(const SolveResult& r) {
    ordered_json j;
    j["objects"] = r.names;
    j["best"] = r.best;
    j["samples"] = ordered_json::array();
    for (size_t i = 0; i < r.samples.size(); ++i) {
        const auto& s = r.samples[i];
        ordered_json poses = ordered_json::array();
        for (size_t k = 0; k < s.poses.size(); ++k) {
            ordered_json p = pose_json(s.poses[k]);
            p["name"] = k < r.names.size() ? r.names[k] : "";
            poses.push_back(p);
        }
        j["samples"].push_back(ordered_json{{"best", i == r.best},
                                            {"feasibility", s.feasibility},
                                            {"satisfaction", s.satisfaction},
                                            {"poses", poses}});
    }
    j["warnings"] = r.warnings;
    return j.dump(2) + "\n";
}

SolveResult read_result(const std::string& path) { return parse_result(read_text_file(path)); }
void write_result(const std::string& path, const SolveResult& r) { write_text_file(path, serialize_result(r)); }

// ---------------------------------------------------------------------------
// Configuration

Config::Config() {
    sampler.mcmc_steps = 20;
    training.optimizer = Optimizer::adam;
    training.learning_rate = 2e-3;
    training.final_lr_fraction = 0.1;
    training.ema_decay = 0.995;
    training.noise_draws = 4;
    training.batch_size = 64;
    training.epochs = 150;
}

namespace {

std::string trim(std::string_view s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InvalidInput("invalid number for " + key + ": " + v);
    }
}

size_t to_size(const std::string& v, const std::string& key) {
    const double d = to_double(v, key);
    if (d < 0 || d != std::floor(d)) throw InvalidInput("invalid count for " + key + ": " + v);
    return static_cast<size_t>(d);
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidInput("invalid boolean for " + key + ": " + v);
}

}  // namespace

Config parse_config(const std::string& text_in) {
    Config c;
    std::istringstream in(text_in);
    std::string line, section;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw InvalidInput("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            static const std::set<std::string> kSections{"thresholds", "schedule", "sampler",
                                                         "analytic",   "training", "llm"};
            if (!kSections.contains(section)) throw InvalidInput("unknown config section [" + section + "]");
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) throw InvalidInput("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string v = trim(std::string_view(t).substr(eq + 1));
        const std::string full = section + "." + key;
        if (section.empty()) throw InvalidInput("key outside a section: " + key);
        auto& th = c.thresholds;
        auto& s = c.sampler;
        auto& tr = c.training;
        if (full == "thresholds.edge_near") th.edge_near = to_double(v, full);
        else if (full == "thresholds.align_tol") th.align_tol = to_double(v, full);
        else if (full == "thresholds.angle_tol") th.angle_tol = to_double(v, full);
        else if (full == "thresholds.center_tol") th.center_tol = to_double(v, full);
        else if (full == "thresholds.overlap_frac") th.overlap_frac = to_double(v, full);
        else if (full == "thresholds.spacing_tol") th.spacing_tol = to_double(v, full);
        else if (full == "schedule.steps") c.schedule_steps = to_size(v, full);
        else if (full == "schedule.posterior_variance") {
            if (v == "beta") c.variance = PosteriorVariance::beta;
            else if (v == "beta_tilde") c.variance = PosteriorVariance::beta_tilde;
            else throw InvalidInput("posterior_variance must be beta or beta_tilde");
        } else if (full == "sampler.mcmc_steps") s.mcmc_steps = to_size(v, full);
        else if (full == "sampler.ula_noise_scale") s.ula_noise_scale = to_double(v, full);
        else if (full == "sampler.samples") s.samples = to_size(v, full);
        else if (full == "sampler.seed") s.seed = to_size(v, full);
        else if (full == "sampler.threads") s.threads = static_cast<unsigned>(to_size(v, full));
        else if (full == "sampler.clamp_to_unit") s.clamp_to_unit = to_bool(v, full);
        else if (full == "sampler.average_factors") s.average_factors = to_bool(v, full);
        else if (full == "sampler.scene_terms") s.scene_terms = to_bool(v, full);
        else if (full == "sampler.scene_gap") s.scene_gap = to_double(v, full);
        else if (full == "sampler.scene_stiffness") s.scene_stiffness = to_double(v, full);
        else if (full == "sampler.scene_ramp") s.scene_ramp = to_double(v, full);
        else if (full == "analytic.stiffness") c.analytic.stiffness = to_double(v, full);
        else if (full == "analytic.margin_frac") c.analytic.margin_frac = to_double(v, full);
        else if (full == "training.epochs") tr.epochs = to_size(v, full);
        else if (full == "training.batch") tr.batch_size = to_size(v, full);
        else if (full == "training.lr") tr.learning_rate = to_double(v, full);
        else if (full == "training.momentum") tr.momentum = to_double(v, full);
        else if (full == "training.optimizer") {
            if (v == "sgd") tr.optimizer = Optimizer::sgd;
            else if (v == "adam") tr.optimizer = Optimizer::adam;
            else throw InvalidInput("optimizer must be sgd or adam");
        } else if (full == "training.final_lr_fraction") tr.final_lr_fraction = to_double(v, full);
        else if (full == "training.ema_decay") tr.ema_decay = to_double(v, full);
        else if (full == "training.noise_draws") tr.noise_draws = to_size(v, full);
        else if (full == "training.seed") tr.seed = to_size(v, full);
        else if (full == "training.schedule_steps") tr.schedule_steps = to_size(v, full);
        else if (full == "llm.url") c.llm.url = v;
        else if (full == "llm.model") c.llm.model = v;
        else if (full == "llm.timeout_s") c.llm.timeout_s = to_double(v, full);
        else if (full == "llm.attempts") c.llm.attempts = to_size(v, full);
        else if (full == "llm.backoff_s") c.llm.backoff_s = to_double(v, full);
        else if (full == "llm.rate_per_s") c.llm.rate_per_s = to_double(v, full);
        else if (full == "llm.max_iterations") c.reflection_iterations = to_size(v, full);
        else throw InvalidInput("unknown config key " + full);
    }
    c.thresholds.validate();
    c.sampler.validate();
    c.training.validate();
    if (c.schedule_steps == 0) throw InvalidInput("schedule.steps must be positive");
    c.analytic.thresholds = c.thresholds;
    c.sampler.variance = c.variance;
    return c;
}

Config read_config(const std::string& path) { return parse_config(read_text_file(path)); }

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s = buf;
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::string escape_xml(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const Scene& scene) {
    scene.table.validate();
    constexpr double kWidthPx = 800.0, kPad = 20.0;
    const double scale = kWidthPx / scene.table.length;
    const double w = kWidthPx, h = scene.table.width * scale;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w + 2 * kPad) << "\" height=\""
       << fmt(h + 2 * kPad) << "\" viewBox=\"0 0 " << fmt(w + 2 * kPad) << " " << fmt(h + 2 * kPad) << "\">\n";
    os << "  <rect class=\"table\" x=\"" << fmt(kPad) << "\" y=\"" << fmt(kPad) << "\" width=\"" << fmt(w)
       << "\" height=\"" << fmt(h) << "\" fill=\"#f4ead5\" stroke=\"#6b4f2a\" stroke-width=\"2\"/>\n";
    if (scene.poses && !scene.objects.empty()) {
        std::vector<bool> colliding(scene.objects.size(), false);
        const FeasibilityReport f = feasibility_report(scene);
        for (size_t i = 0; i < colliding.size(); ++i) colliding[i] = !f.feasible[i];
        // Unit table frame with y pointing to the back edge, so boxes rotate
        // exactly as in the collision geometry and rotate() reads as theta.
        os << "  <g transform=\"translate(" << fmt(kPad) << " " << fmt(kPad + h) << ") scale(" << fmt(w) << " "
           << fmt(-h) << ")\">\n";
        for (size_t i = 0; i < scene.objects.size(); ++i) {
            const auto& o = scene.objects[i];
            const Pose& p = (*scene.poses)[i];
            const Vec2 he = normalized_half_extents(o, scene.table);
            os << "    <rect class=\"object\" data-name=\"" << escape_xml(o.name) << "\" x=\"" << fmt6(-he.x)
               << "\" y=\"" << fmt6(-he.y) << "\" width=\"" << fmt6(2 * he.x) << "\" height=\"" << fmt6(2 * he.y)
               << "\" transform=\"translate(" << fmt6(p.x) << " " << fmt6(p.y) << ") rotate("
               << fmt(p.theta * 180.0 / kPi) << ")\" fill=\"#9ec5e8\" fill-opacity=\"0.8\" stroke=\""
               << (colliding[i] ? "#d62728" : "#1f3b57") << "\" stroke-width=\"" << (colliding[i] ? "3" : "1")
               << "\" vector-effect=\"non-scaling-stroke\"/>\n";
        }
        os << "  </g>\n";
        for (size_t i = 0; i < scene.objects.size(); ++i) {
            const Pose& p = (*scene.poses)[i];
            os << "  <text x=\"" << fmt(kPad + p.x * w) << "\" y=\"" << fmt(kPad + h - p.y * h)
               << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
               << escape_xml(scene.objects[i].name) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace form
