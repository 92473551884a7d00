#include "form/proposer.hpp"

#include "form/energy.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace form {

std::string_view family_name(TaskFamily f) {
    switch (f) {
        case TaskFamily::study_desk: return "study_desk";
        case TaskFamily::coffee_table: return "coffee_table";
        case TaskFamily::dining_table: return "dining_table";
    }
    return "unknown";
}

TaskFamily parse_family(std::string_view name) {
    for (TaskFamily f : {TaskFamily::study_desk, TaskFamily::coffee_table, TaskFamily::dining_table}) {
        if (family_name(f) == name) return f;
    }
    throw InvalidInput("unknown task family: " + std::string(name));
}

std::string base_type(std::string_view name) {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    size_t end = s.size();
    while (end > 0 && std::isdigit(static_cast<unsigned char>(s[end - 1]))) --end;
    if (end < s.size() && end > 1 && s[end - 1] == '_') return s.substr(0, end - 1);
    return s;
}

size_t instance_index(std::string_view name) {
    size_t end = name.size();
    while (end > 0 && std::isdigit(static_cast<unsigned char>(name[end - 1]))) --end;
    if (end == name.size() || end < 2 || name[end - 1] != '_') return 0;
    return std::stoul(std::string(name.substr(end)));
}

// ---------------------------------------------------------------------------
// Instruction parsing

namespace {

enum class Key { count, side_by_side, left_handed, child, shared, activity };

struct Trigger {
    std::string_view phrase;
    Key key;
    size_t count = 0;
    std::string_view activity = {};
    // Restricts the trigger to one family; nullopt-like sentinel = all.
    int family = -1;
};

constexpr int kStudy = static_cast<int>(TaskFamily::study_desk);
constexpr int kCoffee = static_cast<int>(TaskFamily::coffee_table);

// Matched on word boundaries against the lower-cased instruction. For the
// activity key the first matching row wins.
constexpr Trigger kTriggers[] = {
    {"for one", Key::count, 1},
    {"for 1", Key::count, 1},
    {"single diner", Key::count, 1},
    {"for two", Key::count, 2},
    {"for 2", Key::count, 2},
    {"two people", Key::count, 2},
    {"two guests", Key::count, 2},
    {"two diners", Key::count, 2},
    {"parent and a child", Key::count, 2},
    {"for three", Key::count, 3},
    {"three people", Key::count, 3},
    {"for four", Key::count, 4},
    {"for 4", Key::count, 4},
    {"four people", Key::count, 4},
    {"parent and a child", Key::child},
    {"with kids", Key::child},
    {"child", Key::child},
    {"side by side", Key::side_by_side},
    {"same side", Key::side_by_side},
    {"left handed", Key::left_handed},
    {"left hander", Key::left_handed},
    {"sharing", Key::shared},
    {"shared", Key::shared},
    {"share", Key::shared},
    {"party", Key::activity, 0, "party", kCoffee},
    {"chess", Key::activity, 0, "game", kCoffee},
    {"game", Key::activity, 0, "game", kCoffee},
    {"romantic", Key::activity, 0, "romantic", kCoffee},
    {"snacks", Key::activity, 0, "tea", kCoffee},
    {"tea", Key::activity, 0, "tea", kCoffee},
    {"coffee for", Key::activity, 0, "tea", kCoffee},
    {"enjoy coffee", Key::activity, 0, "tea", kCoffee},
    {"laptop", Key::activity, 0, "study", kCoffee},
    {"notenotepad", Key::activity, 0, "study", kCoffee},
    {"work", Key::activity, 0, "study", kCoffee},
    {"working", Key::activity, 0, "study", kCoffee},
    {"read", Key::activity, 0, "reading", kCoffee},
    {"notepads", Key::activity, 0, "notepad", kStudy},
    {"notepad", Key::activity, 0, "notepad", kStudy},
    {"laptops", Key::activity, 0, "laptop", kStudy},
    {"laptop", Key::activity, 0, "laptop", kStudy},
    {"computer", Key::activity, 0, "computer", kStudy},
    {"books", Key::activity, 0, "reading", kStudy},
};

std::string normalize_text(std::string_view text) {
    std::string s = " ";
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        s.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : ' ');
    }
    s.push_back(' ');
    // Collapse runs of spaces so phrases match across punctuation.
    std::string out;
    for (char c : s) {
        if (c == ' ' && !out.empty() && out.back() == ' ') continue;
        out.push_back(c);
    }
    if (out.empty() || out.back() != ' ') out.push_back(' ');
    return out;
}

bool has_phrase(const std::string& norm, std::string_view phrase) {
    std::string p = " ";
    for (char c : phrase) p.push_back(c == '-' ? ' ' : c);
    p.push_back(' ');
    return norm.find(p) != std::string::npos;
}

}  // namespace

TaskContext parse_instruction(std::string_view text, TaskFamily family) {
    TaskContext ctx;
    const std::string norm = normalize_text(text);
    for (const Trigger& t : kTriggers) {
        if (t.family >= 0 && t.family != static_cast<int>(family)) continue;
        if (!has_phrase(norm, t.phrase)) continue;
        switch (t.key) {
            case Key::count:
                if (!ctx.count_given) {
                    ctx.count = t.count;
                    ctx.count_given = true;
                }
                break;
            case Key::side_by_side: ctx.side_by_side = true; break;
            case Key::left_handed: ctx.left_handed = true; break;
            case Key::child: ctx.with_child = true; break;
            case Key::shared: ctx.shared_dishes = true; break;
            case Key::activity:
                if (ctx.activity.empty()) ctx.activity = std::string(t.activity);
                break;
        }
    }
    if (ctx.activity.empty() && family == TaskFamily::coffee_table) ctx.activity = "storage&decoration";
    return ctx;
}

// ---------------------------------------------------------------------------
// Frame transforms

namespace {

RelationId swap_left_right(RelationId r) {
    switch (r) {
        case RelationId::left_of: return RelationId::right_of;
        case RelationId::right_of: return RelationId::left_of;
        case RelationId::left_half: return RelationId::right_half;
        case RelationId::right_half: return RelationId::left_half;
        case RelationId::near_left_edge: return RelationId::near_right_edge;
        case RelationId::near_right_edge: return RelationId::near_left_edge;
        default: return r;
    }
}

RelationId swap_front_back(RelationId r) {
    switch (r) {
        case RelationId::front_half: return RelationId::back_half;
        case RelationId::back_half: return RelationId::front_half;
        case RelationId::near_front_edge: return RelationId::near_back_edge;
        case RelationId::near_back_edge: return RelationId::near_front_edge;
        default: return r;
    }
}

}  // namespace

GroundAtom mirror_left_right(const GroundAtom& atom) { return {swap_left_right(atom.relation), atom.args}; }

GroundAtom rotate_half_turn(const GroundAtom& atom) {
    return {swap_front_back(swap_left_right(atom.relation)), atom.args};
}

// ---------------------------------------------------------------------------
// Categorization

namespace {

using Groups = std::map<std::string, std::vector<std::string>>;

bool in_list(const std::string& type, std::initializer_list<std::string_view> list) {
    return std::find(list.begin(), list.end(), type) != list.end();
}

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

// Diner-local main items, in priority order.
constexpr std::string_view kDiningMains[] = {"serving_plate", "plate",    "dinner_plate", "small_plate",
                                             "ramen_bowl",    "baby_plate", "baby_bowl",  "rice_bowl",
                                             "bowl"};
// Items placed outward to the diner's left, innermost first.
constexpr std::string_view kDiningLeft[] = {"rice_bowl", "baby_bowl", "fork", "baby_fork", "napkin"};
// Items placed outward to the diner's right, innermost first.
constexpr std::string_view kDiningRight[] = {"knife",    "chopsticks", "spoon", "baby_spoon",
                                             "glass",    "cup",        "baby_cup"};

bool dining_individual(const std::string& type) {
    for (auto m : kDiningMains) {
        if (type == m) return true;
    }
    for (auto m : kDiningLeft) {
        if (type == m) return true;
    }
    for (auto m : kDiningRight) {
        if (type == m) return true;
    }
    return starts_with(type, "baby_");
}

bool dining_shared(const std::string& type) {
    return in_list(type, {"medium_plate", "shared_plate", "serving_bowl", "large_plate", "platter"});
}

void seat_diners(TaskContext& ctx) {
    using R = RelationId;
    ctx.seating.clear();
    const size_t n = std::max<size_t>(1, ctx.count);
    if (n == 1) {
        ctx.seating.push_back({R::central_column, R::near_front_edge});
        return;
    }
    if (n == 2 && ctx.side_by_side) {
        ctx.seating.push_back({R::left_half, R::near_front_edge});
        ctx.seating.push_back({R::right_half, R::near_front_edge});
        return;
    }
    if (n == 2) {
        ctx.seating.push_back({R::central_column, R::near_front_edge});
        ctx.seating.push_back({R::central_column, R::near_back_edge});
        return;
    }
    // Larger parties: two per side, front side first; diner 3 faces diner 1.
    const size_t front = (n + 1) / 2;
    const size_t back = n - front;
    auto side = [&](size_t k, size_t total, R edge) {
        if (total == 1) return std::vector<R>{R::central_column, edge};
        return std::vector<R>{k % 2 == 0 ? R::left_half : R::right_half, edge};
    };
    for (size_t k = 0; k < front; ++k) ctx.seating.push_back(side(k, front, R::near_front_edge));
    for (size_t k = 0; k < back; ++k) ctx.seating.push_back(side(k, back, R::near_back_edge));
}

Groups categorize_dining(const Scene& scene, TaskContext& ctx) {
    Groups g;
    size_t max_suffix = 0;
    for (const auto& o : scene.objects) {
        const std::string type = base_type(o.name);
        if (dining_shared(type)) {
            g["shared"].push_back(o.name);
        } else if (dining_individual(type)) {
            g["individual"].push_back(o.name);
            if (!starts_with(type, "baby_")) max_suffix = std::max(max_suffix, instance_index(o.name));
        } else {
            g["others"].push_back(o.name);
        }
    }
    if (!ctx.count_given) ctx.count = std::max<size_t>(1, max_suffix);
    if (ctx.with_child) ctx.count = std::max<size_t>(2, ctx.count);
    seat_diners(ctx);
    const size_t n = ctx.seating.size();
    for (const auto& name : g["individual"]) {
        const std::string type = base_type(name);
        size_t diner = 0;
        if (starts_with(type, "baby_") && ctx.with_child) {
            diner = n - 1;
        } else if (const size_t k = instance_index(name); k > 0) {
            diner = (k - 1) % n;
        }
        g["diner_" + std::to_string(diner + 1)].push_back(name);
    }
    return g;
}

Groups categorize_study(const Scene& scene, TaskContext& ctx) {
    Groups g;
    bool has_monitor = false, has_keyboard = false;
    for (const auto& o : scene.objects) {
        const std::string t = base_type(o.name);
        has_monitor |= t == "monitor";
        has_keyboard |= t == "keyboard";
    }
    for (const auto& o : scene.objects) {
        const std::string t = base_type(o.name);
        if (t == "monitor") {
            g["output"].push_back(o.name);
        } else if (t == "laptop") {
            // A laptop driving an external monitor and keyboard acts as a display.
            g[has_monitor && has_keyboard ? "output" : "io"].push_back(o.name);
        } else if (t == "keyboard" || t == "notepad") {
            g["input"].push_back(o.name);
        } else if (t == "mouse" || t == "pen") {
            g["associated"].push_back(o.name);
        } else if (t == "book") {
            g["reference"].push_back(o.name);
        } else {
            g["remaining"].push_back(o.name);
        }
    }
    ctx.seating = {{RelationId::central_column, RelationId::near_front_edge}};
    return g;
}

bool coffee_storage(const std::string& t) {
    return in_list(t, {"tray", "keys", "key", "remote_controller", "remote", "glasses", "magazine", "notepad",
                       "book"});
}
bool coffee_decoration(const std::string& t) { return in_list(t, {"vase", "candle", "flower", "plant"}); }
bool coffee_shared(const std::string& t) {
    return in_list(t, {"snack_bowl", "beverage", "coffee_pot", "tea_pot", "teapot", "chess_board", "board_game",
                       "fruit_bowl"});
}
bool coffee_individual(const std::string& t) {
    return in_list(t, {"coffee_cup", "tea_cup", "cup", "cake_plate", "laptop", "notenotepad", "draft_paper",
                       "ipad"});
}

Groups categorize_coffee(const Scene& scene, TaskContext& ctx) {
    Groups g;
    const bool activity = !ctx.activity.empty() && ctx.activity != "storage&decoration";
    const bool reading = ctx.activity == "reading";
    size_t stackables = 0;
    for (const auto& o : scene.objects) {
        const std::string t = base_type(o.name);
        stackables += t == "magazine" || t == "notepad";
    }
    for (const auto& o : scene.objects) {
        const std::string t = base_type(o.name);
        if (reading && stackables == 1 && (t == "magazine" || t == "notepad")) {
            g["individual"].push_back(o.name);  // the item being read
        } else if (coffee_storage(t)) {
            g["storage"].push_back(o.name);
        } else if (coffee_decoration(t)) {
            g["decoration"].push_back(o.name);
        } else if (activity && coffee_shared(t)) {
            g["shared"].push_back(o.name);
        } else if (activity && coffee_individual(t)) {
            g["individual"].push_back(o.name);
        } else {
            g["remaining"].push_back(o.name);
        }
    }
    using R = RelationId;
    ctx.seating.clear();
    const size_t n = std::max<size_t>(1, ctx.count);
    for (size_t k = 0; k < n; ++k) {
        if (n == 1) {
            ctx.seating.push_back({R::central_column, R::near_front_edge});
        } else {
            ctx.seating.push_back({k % 2 == 0 ? R::left_half : R::right_half, R::near_front_edge});
        }
    }
    for (const auto& name : g["individual"]) {
        const size_t k = instance_index(name);
        const size_t who = k == 0 ? 0 : (k - 1) % n;
        g["participant_" + std::to_string(who + 1)].push_back(name);
    }
    return g;
}

}  // namespace

std::map<std::string, std::vector<std::string>> categorize_objects(const Scene& scene, TaskFamily family,
                                                                   TaskContext& context) {
    Groups g;
    switch (family) {
        case TaskFamily::dining_table: g = categorize_dining(scene, context); break;
        case TaskFamily::study_desk: g = categorize_study(scene, context); break;
        case TaskFamily::coffee_table: g = categorize_coffee(scene, context); break;
    }
    context.groups = g;
    return g;
}

// ---------------------------------------------------------------------------
// Interpreters

namespace {

using R = RelationId;

struct Emitter {
    GroundGraph graph;
    void unary(R r, const std::string& a) { graph.add({r, {a}}); }
    void binary(R r, const std::string& a, const std::string& b) { graph.add({r, {a, b}}); }
    void add(GroundAtom atom) { graph.add(std::move(atom)); }
    // Equal-spaced line for three or more, pairwise alignment for two.
    void row(const std::vector<std::string>& items) {
        if (items.size() >= kMinGroupSize) {
            add({R::aligned_in_horizontal_line, items});
        } else if (items.size() == 2) {
            binary(R::horizontally_aligned, items[0], items[1]);
        }
    }
    void column(const std::vector<std::string>& items) {
        if (items.size() >= kMinGroupSize) {
            add({R::aligned_in_vertical_line, items});
        } else if (items.size() == 2) {
            binary(R::vertically_aligned, items[0], items[1]);
        }
    }
    /// Stacks items against the left edge: one column, or a row-major grid
    /// whose first column touches the edge.
    void left_stack(const std::vector<std::string>& items) {
        if (items.size() >= 4) {
            add({R::regular_grid, items});
            const size_t cols = grid_shape(items.size()).second;
            for (size_t i = 0; i < items.size(); i += cols) unary(R::near_left_edge, items[i]);
            return;
        }
        column(items);
        for (const auto& i : items) unary(R::near_left_edge, i);
    }
    void chain_left_to_right(const std::vector<std::string>& items) {
        for (size_t k = 0; k + 1 < items.size(); ++k) binary(R::left_of, items[k], items[k + 1]);
    }
};

std::vector<std::string> of_type(const std::vector<std::string>& names, std::string_view type) {
    std::vector<std::string> out;
    for (const auto& n : names) {
        if (base_type(n) == type) out.push_back(n);
    }
    return out;
}

const std::vector<std::string>& group(const TaskContext& ctx, const std::string& key) {
    static const std::vector<std::string> kEmpty;
    const auto it = ctx.groups.find(key);
    return it == ctx.groups.end() ? kEmpty : it->second;
}

bool seat_is_back(const std::vector<R>& seat) {
    return std::find(seat.begin(), seat.end(), R::near_back_edge) != seat.end();
}

R seat_column(const std::vector<R>& seat) {
    for (R r : seat) {
        if (r == R::left_half || r == R::right_half || r == R::central_column) return r;
    }
    return R::central_column;
}

// One diner's setting in the diner's own frame (seated at the front edge,
// right-handed), returned with the main item.
std::pair<std::vector<GroundAtom>, std::string> diner_template(const std::vector<std::string>& items) {
    std::vector<GroundAtom> local;
    std::string main;
    for (auto type : kDiningMains) {
        for (const auto& n : items) {
            if (main.empty() && base_type(n) == type) main = n;
        }
    }
    if (main.empty()) {
        if (items.empty()) return {local, main};
        main = items.front();
    }
    std::vector<std::string> left, right;
    std::set<std::string> placed{main};
    for (auto type : kDiningLeft) {
        for (const auto& n : items) {
            if (!placed.contains(n) && base_type(n) == type) {
                left.push_back(n);
                placed.insert(n);
            }
        }
    }
    for (auto type : kDiningRight) {
        for (const auto& n : items) {
            if (!placed.contains(n) && base_type(n) == type) {
                right.push_back(n);
                placed.insert(n);
            }
        }
    }
    for (const auto& n : items) {
        if (!placed.contains(n)) right.push_back(n);
    }
    auto near_diner = [](const std::string& n) {
        const std::string t = base_type(n);
        return t != "glass" && t != "cup" && t != "baby_cup";
    };
    local.push_back({R::near_front_edge, {main}});
    std::string prev = main;
    for (const auto& n : left) {
        local.push_back({R::left_of, {n, prev}});
        if (near_diner(n)) local.push_back({R::near_front_edge, {n}});
        prev = n;
    }
    prev = main;
    for (const auto& n : right) {
        local.push_back({R::right_of, {n, prev}});
        if (near_diner(n)) local.push_back({R::near_front_edge, {n}});
        prev = n;
    }
    return {local, main};
}

GroundGraph propose_dining(const Scene& scene, const TaskContext& ctx) {
    (void)scene;
    Emitter e;
    // Shared dishes in the central row.
    const auto& shared = group(ctx, "shared");
    if (shared.size() == 1) {
        e.unary(R::centered_table, shared[0]);
    } else if (!shared.empty()) {
        for (const auto& s : shared) {
            e.unary(R::central_row, s);
            if (shared.size() <= 3) e.unary(R::central_column, s);
        }
        e.row(shared);
    }
    // Individual settings per diner.
    std::vector<std::string> mains(ctx.seating.size());
    for (size_t d = 0; d < ctx.seating.size(); ++d) {
        const auto& items = group(ctx, "diner_" + std::to_string(d + 1));
        auto [local, main] = diner_template(items);
        if (main.empty()) continue;
        mains[d] = main;
        const auto& seat = ctx.seating[d];
        const bool back = seat_is_back(seat);
        const R column = seat_column(seat);
        for (auto atom : local) {
            if (ctx.left_handed && d == 0) atom = mirror_left_right(atom);
            if (back) atom = rotate_half_turn(atom);
            e.add(std::move(atom));
        }
        if (column == R::central_column) {
            e.unary(R::central_column, main);
        } else {
            for (const auto& n : items) e.unary(column, n);
        }
    }
    // Facing diners mirror each other; side-by-side diners mirror across the
    // vertical axis.
    for (size_t a = 0; a < mains.size(); ++a) {
        for (size_t b = a + 1; b < mains.size(); ++b) {
            if (mains[a].empty() || mains[b].empty()) continue;
            const bool back_a = seat_is_back(ctx.seating[a]), back_b = seat_is_back(ctx.seating[b]);
            const R col_a = seat_column(ctx.seating[a]), col_b = seat_column(ctx.seating[b]);
            if (back_a != back_b && col_a == col_b) {
                e.binary(R::horizontal_symmetry_on_table, mains[a], mains[b]);
            } else if (back_a == back_b && col_a != col_b && col_a != R::central_column &&
                       col_b != R::central_column && !ctx.with_child) {
                e.binary(R::vertical_symmetry_on_table, mains[a], mains[b]);
            }
        }
    }
    // Remaining items in a neat row along the back edge, beside any diner
    // seated there.
    const auto& others = group(ctx, "others");
    bool back_center = false, back_sides = false;
    for (const auto& seat : ctx.seating) {
        if (!seat_is_back(seat)) continue;
        (seat_column(seat) == R::central_column ? back_center : back_sides) = true;
    }
    for (const auto& o : others) {
        if (back_sides) {
            e.unary(R::central_row, o);
        } else {
            e.unary(R::near_back_edge, o);
            if (back_center) e.unary(R::right_half, o);
        }
    }
    e.row(others);
    return e.graph;
}

GroundGraph propose_study(const Scene& scene, const TaskContext& ctx) {
    (void)scene;
    Emitter e;
    const auto& io = group(ctx, "io");
    const auto& input = group(ctx, "input");
    const auto& output = group(ctx, "output");
    const auto& assoc = group(ctx, "associated");
    // Front row: devices used by hand with their companions on the working side.
    std::vector<std::string> front;
    for (const auto& d : io) front.push_back(d);
    for (const auto& d : of_type(input, "keyboard")) front.push_back(d);
    const auto mice = of_type(assoc, "mouse");
    if (!front.empty()) front.insert(front.end(), mice.begin(), mice.end());
    for (const auto& d : of_type(input, "notepad")) front.push_back(d);
    for (const auto& d : of_type(assoc, "pen")) front.push_back(d);
    if (front.empty()) front.insert(front.end(), mice.begin(), mice.end());
    if (!front.empty()) e.unary(R::central_column, front.front());
    for (const auto& d : front) e.unary(R::near_front_edge, d);
    e.chain_left_to_right(front);
    // Back row: displays, any display laptop to the left of the monitor.
    const auto monitors = of_type(output, "monitor");
    const auto displays = of_type(output, "laptop");
    if (!monitors.empty()) {
        e.unary(R::central_column, monitors.front());
        for (size_t k = 1; k < monitors.size(); ++k) e.binary(R::right_of, monitors[k], monitors[k - 1]);
    } else if (!displays.empty()) {
        e.unary(R::central_column, displays.front());
    }
    for (const auto& d : output) e.unary(R::near_back_edge, d);
    if (!monitors.empty()) {
        std::string prev = monitors.front();
        for (const auto& d : displays) {
            e.binary(R::left_of, d, prev);
            prev = d;
        }
    } else {
        for (size_t k = 1; k < displays.size(); ++k) e.binary(R::right_of, displays[k], displays[k - 1]);
    }
    // Reference books within reach on the non-working side.
    const auto& books = group(ctx, "reference");
    e.left_stack(books);
    // Everything else by common use.
    for (const auto& o : group(ctx, "remaining")) {
        const std::string t = base_type(o);
        if (t == "lamp") {
            e.unary(R::near_back_edge, o);
            e.unary(R::left_half, o);
        } else if (t == "mug" || t == "cup") {
            e.unary(R::near_right_edge, o);
            e.unary(R::front_half, o);
        } else if (t == "tissue_box") {
            e.unary(R::near_right_edge, o);
            e.unary(R::back_half, o);
        } else if (t == "glasses") {
            e.unary(R::near_left_edge, o);
            e.unary(R::front_half, o);
        } else {
            e.unary(R::near_back_edge, o);
            e.unary(R::right_half, o);
        }
    }
    if (!ctx.left_handed) return e.graph;
    GroundGraph mirrored;
    for (const auto& a : e.graph.atoms()) mirrored.add(mirror_left_right(a));
    return mirrored;
}

// Vases along the back edge with candles in symmetric pairs about the first.
void place_decoration(Emitter& e, const std::vector<std::string>& decoration, bool centered) {
    const auto vases = of_type(decoration, "vase");
    std::vector<std::string> candles = of_type(decoration, "candle");
    std::vector<std::string> rest;
    for (const auto& d : decoration) {
        const std::string t = base_type(d);
        if (t != "vase" && t != "candle") rest.push_back(d);
    }
    std::vector<std::string> pieces = vases;
    pieces.insert(pieces.end(), rest.begin(), rest.end());
    if (!pieces.empty()) {
        if (centered) {
            e.unary(R::centered_table, pieces.front());
        } else {
            e.unary(R::central_column, pieces.front());
            for (const auto& v : pieces) e.unary(R::near_back_edge, v);
            e.row(pieces);
        }
    }
    for (size_t k = 0; k + 1 < candles.size(); k += 2) {
        if (!pieces.empty()) {
            e.add({R::vertical_line_symmetry, {pieces.front(), candles[k], candles[k + 1]}});
        } else {
            e.binary(R::horizontally_aligned, candles[k], candles[k + 1]);
        }
        const R band = centered ? (k == 0 ? R::central_row : R::back_half) : R::back_half;
        e.unary(band, candles[k]);
        e.unary(band, candles[k + 1]);
    }
    if (candles.size() % 2 == 1) {
        const auto& c = candles.back();
        e.unary(R::back_half, c);
        if (!pieces.empty()) e.binary(R::horizontally_aligned, c, pieces.front());
    }
}

// Trays hold the small items; stackable papers sit in a block at the side.
void place_storage(Emitter& e, const std::vector<std::string>& storage, bool rear) {
    const auto trays = of_type(storage, "tray");
    std::vector<std::string> papers;
    for (const auto& s : storage) {
        const std::string t = base_type(s);
        if (t == "magazine" || t == "notepad" || t == "book") papers.push_back(s);
    }
    const R edge = rear ? R::near_back_edge : R::near_front_edge;
    for (const auto& t : trays) {
        e.unary(edge, t);
        e.unary(rear ? R::near_right_edge : R::right_half, t);
    }
    for (const auto& s : storage) {
        const std::string t = base_type(s);
        if (t == "tray" || t == "magazine" || t == "notepad" || t == "book") continue;
        if (!trays.empty() && (t == "keys" || t == "key" || t == "glasses")) {
            e.binary(R::on_top_of, s, trays.front());
        } else if (!trays.empty()) {
            e.binary(rear ? R::left_of : R::right_of, s, trays.front());
            e.unary(edge, s);
        } else {
            e.unary(edge, s);
            e.unary(R::right_half, s);
        }
    }
    e.left_stack(papers);
}

GroundGraph propose_coffee(const Scene& scene, const TaskContext& ctx) {
    (void)scene;
    Emitter e;
    const auto& storage = group(ctx, "storage");
    const auto& decoration = group(ctx, "decoration");
    const bool activity = !ctx.activity.empty() && ctx.activity != "storage&decoration";
    if (!activity) {
        place_storage(e, storage, false);
        place_decoration(e, decoration, false);
    } else {
        // Shared items: the first kind at the center, further kinds behind it.
        const auto& shared = group(ctx, "shared");
        std::vector<std::string> kinds;
        for (const auto& s : shared) {
            const std::string t = base_type(s);
            if (std::find(kinds.begin(), kinds.end(), t) == kinds.end()) kinds.push_back(t);
        }
        for (size_t k = 0; k < kinds.size(); ++k) {
            const auto items = of_type(shared, kinds[k]);
            if (k == 0 && items.size() == 1) {
                e.unary(R::centered_table, items[0]);
                continue;
            }
            for (const auto& s : items) {
                e.unary(k == 0 ? R::central_row : R::back_half, s);
                if (k == 0 && items.size() <= 3) e.unary(R::central_column, s);
            }
            if (items.size() >= 4) {
                e.add({R::regular_grid, items});
            } else {
                e.row(items);
            }
        }
        // Personal items in front of each participant.
        for (size_t p = 0; p < ctx.seating.size(); ++p) {
            const auto& items = group(ctx, "participant_" + std::to_string(p + 1));
            if (items.empty()) continue;
            e.unary(seat_column(ctx.seating[p]), items.front());
            for (const auto& i : items) e.unary(R::near_front_edge, i);
            e.chain_left_to_right(items);
        }
        place_storage(e, storage, true);
        place_decoration(e, decoration, ctx.activity == "romantic" && shared.empty());
    }
    for (const auto& o : group(ctx, "remaining")) {
        e.unary(R::near_right_edge, o);
        e.unary(R::back_half, o);
    }
    return e.graph;
}

}  // namespace

GroundGraph propose_program(const Scene& scene, TaskFamily family, TaskContext context) {
    if (context.groups.empty()) categorize_objects(scene, family, context);
    for (const auto& [key, names] : context.groups) {
        for (const auto& n : names) {
            if (!scene.find(n)) throw InvalidInput("grouped object not in scene: " + n);
        }
    }
    switch (family) {
        case TaskFamily::dining_table: return propose_dining(scene, context);
        case TaskFamily::study_desk: return propose_study(scene, context);
        case TaskFamily::coffee_table: return propose_coffee(scene, context);
    }
    throw InvalidInput("unsupported task family");
}

GroundGraph propose_program(const Scene& scene, TaskFamily family) {
    return propose_program(scene, family, parse_instruction(scene.instruction.value_or(""), family));
}

// ---------------------------------------------------------------------------
// Self-reflection

std::vector<std::string> graph_issues(const GroundGraph& graph, const Scene& scene) {
    std::vector<std::string> out;
    for (const auto& c : check_conflicts(graph, scene)) out.push_back("conflict: " + c.description);
    for (const auto& n : check_completeness(graph, scene)) out.push_back("unconstrained: " + n);
    return out;
}

namespace {

GroundGraph repair_program(const GroundGraph& graph, const Scene& scene) {
    std::set<size_t> drop;
    for (const auto& c : check_conflicts(graph, scene)) {
        if (!drop.contains(c.first_index)) drop.insert(c.second_index);
    }
    GroundGraph out;
    for (size_t i = 0; i < graph.size(); ++i) {
        if (!drop.contains(i)) out.add(graph.atoms()[i]);
    }
    for (const auto& n : check_completeness(out, scene)) {
        out.add({R::central_row, {n}});
        out.add({R::central_column, {n}});
    }
    return out;
}

}  // namespace

GroundGraph reflect_llm_round(const GroundGraph& graph, const Scene& scene, const ProposerBackend& backend,
                              TaskFamily family, std::string_view instruction, std::vector<std::string>& warnings);

ReflectionResult self_reflect(const GroundGraph& graph, const Scene& scene, const ProposerBackend& backend,
                              size_t max_iters, TaskFamily family, std::string_view instruction) {
    ReflectionResult r;
    r.graph = graph;
    for (;;) {
        r.residual = graph_issues(r.graph, scene);
        if (r.residual.empty()) {
            r.clean = true;
            return r;
        }
        if (r.iterations >= max_iters) return r;
        ++r.iterations;
        if (backend.kind == ProposerBackend::Kind::program) {
            r.graph = repair_program(r.graph, scene);
        } else {
            r.graph = reflect_llm_round(r.graph, scene, backend, family, instruction, r.warnings);
        }
    }
}

}  // namespace form
