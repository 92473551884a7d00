#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "form/proposer.hpp"

namespace form {

using nlohmann::json;

LlmSettings LlmSettings::from_environment() {
    LlmSettings s;
    if (const char* url = std::getenv("FORM_LLM_URL")) s.url = url;
    if (const char* key = std::getenv("FORM_LLM_KEY")) s.api_key = key;
    return s;
}

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw TransportError("endpoint URL needs a scheme: " + url);
    const size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

// Process-wide token bucket shared by all clients.
class RateLimiter {
  public:
    void acquire(double rate, double burst) {
        if (!(rate > 0.0)) return;
        std::unique_lock lock(mu_);
        for (;;) {
            const auto now = std::chrono::steady_clock::now();
            if (!started_) {
                tokens_ = burst;
                last_ = now;
                started_ = true;
            }
            tokens_ = std::min(burst, tokens_ + rate * std::chrono::duration<double>(now - last_).count());
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            const double wait = (1.0 - tokens_) / rate;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait));
            lock.lock();
        }
    }

  private:
    std::mutex mu_;
    bool started_ = false;
    double tokens_ = 0.0;
    std::chrono::steady_clock::time_point last_;
};

RateLimiter& limiter() {
    static RateLimiter r;
    return r;
}

std::string extract_content(const std::string& body) {
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) return body;
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const json& c = j["choices"][0];
        if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string()) {
            return c["message"]["content"].get<std::string>();
        }
        if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
    }
    if (j.contains("content") && j["content"].is_string()) return j["content"].get<std::string>();
    return body;
}

}  // namespace

Transport http_transport() {
    return [](const LlmSettings& s, const std::string& body) -> std::string {
        const SplitUrl u = split_url(s.url);
        httplib::Client client(u.origin);
        const auto secs = static_cast<time_t>(s.timeout_s);
        const auto usecs = static_cast<time_t>((s.timeout_s - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!s.api_key.empty()) headers.emplace("Authorization", "Bearer " + s.api_key);
        auto res = client.Post(u.path, headers, body, "application/json");
        if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300) {
            throw TransportError("service returned HTTP " + std::to_string(res->status));
        }
        return res->body;
    };
}

LlmClient::LlmClient(LlmSettings settings, Transport transport)
    : settings_(std::move(settings)), transport_(std::move(transport)) {
    if (!transport_) transport_ = http_transport();
}

std::string LlmClient::complete(const std::vector<ChatMessage>& messages) {
    if (settings_.url.empty()) throw ProposalFailed("no service endpoint configured (FORM_LLM_URL)");
    json req;
    req["model"] = settings_.model;
    req["messages"] = json::array();
    for (const auto& m : messages) req["messages"].push_back({{"role", m.role}, {"content", m.content}});
    const std::string body = req.dump();
    const size_t attempts = std::max<size_t>(1, settings_.attempts);
    double backoff = settings_.backoff_s;
    std::string last_error;
    for (size_t a = 0; a < attempts; ++a) {
        if (a > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
        limiter().acquire(settings_.rate_per_s, settings_.burst);
        try {
            return extract_content(transport_(settings_, body));
        } catch (const TransportError& e) {
            last_error = e.what();
        }
    }
    throw ProposalFailed("service unreachable after " + std::to_string(attempts) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Atom list parsing

namespace {

struct Cursor {
    std::string_view s;
    size_t i = 0;
    void skip_ws() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool eat(char c) {
        skip_ws();
        if (i < s.size() && s[i] == c) {
            ++i;
            return true;
        }
        return false;
    }
};

// One quoted string, single or double quotes, with backslash escapes.
bool parse_string(Cursor& c, std::string& out) {
    c.skip_ws();
    if (c.i >= c.s.size() || (c.s[c.i] != '"' && c.s[c.i] != '\'')) return false;
    const char q = c.s[c.i++];
    out.clear();
    while (c.i < c.s.size()) {
        const char ch = c.s[c.i++];
        if (ch == q) return true;
        if (ch == '\\' && c.i < c.s.size()) {
            out.push_back(c.s[c.i++]);
        } else {
            out.push_back(ch);
        }
    }
    return false;
}

// Inner list `["rel", "a", ...]` starting at '['; on failure the cursor is
// left just past the closing bracket (or at the end).
bool parse_entry(Cursor& c, std::vector<std::string>& fields) {
    fields.clear();
    if (!c.eat('[')) return false;
    if (c.eat(']')) return false;
    for (;;) {
        std::string f;
        if (!parse_string(c, f)) return false;
        fields.push_back(std::move(f));
        if (c.eat(',')) continue;
        return c.eat(']');
    }
}

}  // namespace

ParsedAtoms parse_atom_list(std::string_view text) {
    ParsedAtoms out;
    // The outer list is the first '[' followed (after blanks) by another '['.
    size_t start = std::string_view::npos;
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '[') continue;
        size_t j = i + 1;
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j < text.size() && text[j] == '[') {
            start = i;
            break;
        }
    }
    if (start == std::string_view::npos) {
        out.warnings.push_back("no bracketed relation list found");
        return out;
    }
    Cursor c{text, start + 1};
    size_t entry = 0;
    for (;;) {
        c.skip_ws();
        if (c.i >= text.size()) {
            out.warnings.push_back("relation list is not closed");
            break;
        }
        if (text[c.i] == ']') break;
        if (text[c.i] != '[') {
            out.warnings.push_back("unexpected text in relation list at offset " + std::to_string(c.i));
            // Resynchronize at the next entry or the end of the list.
            while (c.i < text.size() && text[c.i] != '[' && text[c.i] != ']') ++c.i;
            continue;
        }
        ++entry;
        const size_t begin = c.i;
        std::vector<std::string> fields;
        const bool ok = parse_entry(c, fields);
        if (!ok) {
            // Skip to the end of this entry.
            c.i = begin + 1;
            while (c.i < text.size() && text[c.i] != ']') ++c.i;
            if (c.i < text.size()) ++c.i;
            out.warnings.push_back("malformed entry " + std::to_string(entry));
        } else if (fields.size() < 2) {
            out.warnings.push_back("entry " + std::to_string(entry) + " has no object");
        } else if (const auto rel = try_parse_relation(fields[0]); !rel) {
            out.warnings.push_back("entry " + std::to_string(entry) + ": unknown relation '" + fields[0] + "'");
        } else {
            out.atoms.push_back({*rel, std::vector<std::string>(fields.begin() + 1, fields.end())});
        }
        c.eat(',');
    }
    return out;
}

GroundGraph validate_atoms(const ParsedAtoms& parsed, const Scene& scene, std::vector<std::string>& warnings) {
    warnings.insert(warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
    GroundGraph g;
    for (const auto& a : parsed.atoms) {
        try {
            validate_atom(a, scene);
            g.add(a);
        } catch (const std::exception& e) {
            warnings.push_back("dropped " + a.to_string() + ": " + e.what());
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Prompt

namespace {

constexpr std::string_view kLibrary = R"(Relations (table frame: x to the right, y from the front edge to the back edge):
- near_front_edge(A), near_back_edge(A), near_left_edge(A), near_right_edge(A): A's box lies within a small distance of that table edge.
- front_half(A), back_half(A), left_half(A), right_half(A): A's box lies entirely in that half of the table.
- central_column(A): A's center lies in the middle half of the table's length.
- central_row(A): A's center lies in the middle half of the table's depth.
- centered_table(A): A's center is at the table center.
- horizontally_aligned(A, B): A and B share a bottom line and heading.
- vertically_aligned(A, B): A and B share a center x and heading.
- left_of(A, B): A sits directly left of B, touching sides, overlapping in depth.
- right_of(A, B): A sits directly right of B, touching sides, overlapping in depth.
- on_top_of(A, B): A's box is inside B's box and B is not smaller.
- centered(A, B): A and B share a center.
- vertical_symmetry_on_table(A, B): A and B mirror each other across the table's vertical midline.
- horizontal_symmetry_on_table(A, B): A and B mirror each other across the table's horizontal midline.
- vertical_line_symmetry(Axis, A, B): A and B mirror each other across the vertical line through Axis.
- horizontal_line_symmetry(Axis, A, B): A and B mirror each other across the horizontal line through Axis.
- aligned_in_horizontal_line(A1, ..., An): a row with a shared bottom line and equal spacing.
- aligned_in_vertical_line(A1, ..., An): a column with a shared center x and equal spacing.
- regular_grid(A1, ..., An): rows and columns with constant spacing.)";

constexpr std::string_view kStudySketch = R"(def study_desk_layout(instruction, objects):
    main = main_devices(instruction, objects)
    inputs, outputs, io = split_by_function(main)
    rel = []
    rel += place_inputs_near_front(inputs, companions(inputs, objects))
    rel += place_outputs_near_back(outputs, companions(outputs, objects))
    rel += place_io_at_center_front(io, companions(io, objects))
    rel += place_rest_by_common_use(objects, rel)
    return rel)";

constexpr std::string_view kCoffeeSketch = R"(def coffee_table_layout(instruction, objects):
    activity = main_activity(instruction)  # "storage&decoration" when none is named
    storage, decoration = storage_and_decoration(objects)
    rel = []
    if activity == "storage&decoration":
        rel += storage_within_reach(storage)
        rel += decoration_centered_and_symmetric(decoration)
    else:
        n = participant_count(instruction)
        seats = participant_seats(instruction, n)
        shared, personal, rest = split_by_use(objects, storage, decoration)
        rel += shared_evenly_at_center(shared)
        rel += personal_items_per_participant(personal, n, seats)
        rel += storage_toward_rear(storage)
        rel += decoration_back_center(decoration)
        rel += rest_compact(rest)
    return rel)";

constexpr std::string_view kDiningSketch = R"(def dining_table_layout(instruction, objects):
    n = diner_count(instruction)
    seats = diner_seats(instruction, n)  # first diner at the front edge, the next facing from the back
    shared, personal, others = split_by_ownership(instruction, n, objects)
    rel = []
    rel += shared_dishes_at_center(shared)  # central row or grid
    rel += place_settings_by_etiquette(personal, n, seats)
    rel += others_in_a_neat_row(others)
    rel += symmetry_between_settings(shared, personal, others)
    return rel)";

std::string object_list(const Scene& scene) {
    json names = json::array();
    for (const auto& o : scene.objects) names.push_back(o.name);
    return names.dump();
}

std::string atom_list(const GroundGraph& g) {
    json list = json::array();
    for (const auto& a : g.atoms()) {
        json entry = json::array({std::string(relation_name(a.relation))});
        for (const auto& arg : a.args) entry.push_back(arg);
        list.push_back(entry);
    }
    return list.dump();
}

std::string family_label(TaskFamily f) {
    switch (f) {
        case TaskFamily::study_desk: return "study desk";
        case TaskFamily::coffee_table: return "coffee table";
        case TaskFamily::dining_table: return "dining table";
    }
    return "table";
}

}  // namespace

std::vector<ChatMessage> build_prompt(TaskFamily family, const std::vector<Scene>& examples, const Scene& scene,
                                      std::string_view instruction) {
    const std::string label = family_label(family);
    std::vector<ChatMessage> m;
    std::ostringstream task;
    task << "We arrange objects on a " << label
         << " so that the layout is physically feasible, tidy, and serves the user's instruction. "
            "Layouts are described only with the following spatial relations.\n\n"
         << kLibrary
         << "\n\nYou will receive annotated example layouts and a procedure outline, then a new instruction "
            "with its objects.";
    m.push_back({"system", task.str()});

    std::ostringstream shots;
    shots << "Example layouts for a " << label << ". Relations were read off each arranged example.\n";
    size_t k = 0;
    for (const auto& ex : examples) {
        if (!ex.poses) continue;
        shots << "\nExample " << ++k << ":\n- Instruction: " << ex.instruction.value_or("") << "\n- Objects: "
              << object_list(ex) << "\n- Relations: " << atom_list(annotate(ex)) << "\n";
    }
    m.push_back({"user", shots.str()});

    std::ostringstream sketch;
    sketch << "Procedure outline for a " << label << ":\n";
    switch (family) {
        case TaskFamily::study_desk: sketch << kStudySketch; break;
        case TaskFamily::coffee_table: sketch << kCoffeeSketch; break;
        case TaskFamily::dining_table: sketch << kDiningSketch; break;
    }
    m.push_back({"user", sketch.str()});

    std::ostringstream out;
    out << "Follow the outline for the new instance. First describe the intended layout in words, then list "
           "the relations object by object (position on the table first, then relations to other objects), "
           "then check that the relations match the description and revise if they do not.\n"
           "Directions are in the table frame. For a diner seated at the back edge, that diner's own left and "
           "right are reversed, so a knife on that diner's right is left_of(knife, plate).\n"
        << "Instruction: " << instruction << "\nObjects: " << object_list(scene)
        << "\nEnd with all relations as one list of lists, for example:\n"
           "[[\"near_front_edge\", \"serving_plate_1\"], [\"left_of\", \"fork_1\", \"serving_plate_1\"]]";
    m.push_back({"user", out.str()});
    return m;
}

Proposal propose_llm(const Scene& scene, std::string_view instruction, TaskFamily family,
                     const ProposerBackend& backend) {
    LlmClient client(backend.llm, backend.transport ? backend.transport : http_transport());
    const std::string reply = client.complete(build_prompt(family, backend.examples, scene, instruction));
    Proposal p;
    p.graph = validate_atoms(parse_atom_list(reply), scene, p.warnings);
    if (p.graph.empty()) throw ProposalFailed("the service reply contained no usable relation");
    return p;
}

GroundGraph reflect_llm_round(const GroundGraph& graph, const Scene& scene, const ProposerBackend& backend,
                              TaskFamily family, std::string_view instruction, std::vector<std::string>& warnings) {
    LlmClient client(backend.llm, backend.transport ? backend.transport : http_transport());
    auto messages = build_prompt(family, backend.examples, scene, instruction);
    messages.push_back({"assistant", atom_list(graph)});
    std::ostringstream report;
    report << "The relations above have these problems:\n";
    for (const auto& issue : graph_issues(graph, scene)) report << "- " << issue << "\n";
    report << "Resolve every conflict and give each object at least one relation. Reply with the full "
              "corrected list in the same format.";
    messages.push_back({"user", report.str()});
    try {
        std::vector<std::string> w;
        GroundGraph next = validate_atoms(parse_atom_list(client.complete(messages)), scene, w);
        warnings.insert(warnings.end(), w.begin(), w.end());
        if (next.empty()) {
            warnings.push_back("reflection reply had no usable relation; keeping the previous graph");
            return graph;
        }
        return next;
    } catch (const ProposalFailed& e) {
        warnings.push_back(std::string("reflection round failed: ") + e.what());
        return graph;
    }
}

}  // namespace form
