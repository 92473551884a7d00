#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "form/relations.hpp"

namespace form {

enum class TaskFamily { study_desk, coffee_table, dining_table };

std::string_view family_name(TaskFamily f);
/// Throws InvalidInput for unknown names.
TaskFamily parse_family(std::string_view name);

/// Raised when a proposal cannot be produced (no usable atoms, service failure).
class ProposalFailed : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Object name without its trailing `_<digits>` instance suffix, lower-cased.
std::string base_type(std::string_view name);
/// Trailing instance number, or 0 when the name has none.
size_t instance_index(std::string_view name);

/// Information extracted from the instruction plus object groupings.
struct TaskContext {
    size_t count = 1;  // diners or participants
    bool count_given = false;
    bool side_by_side = false;
    bool left_handed = false;
    bool with_child = false;
    bool shared_dishes = false;
    /// Coffee tables: storage&decoration (default), party, game, tea, study,
    /// reading, romantic. Study desks: laptop, notepad, computer, reading.
    std::string activity;
    /// Region tags per diner or participant, e.g. {central_column, near_front_edge}.
    std::vector<std::vector<RelationId>> seating;
    std::map<std::string, std::vector<std::string>> groups;
};

/// Keyword-based extraction; fields without a match keep their defaults.
TaskContext parse_instruction(std::string_view text, TaskFamily family);

/// Name-prefix categorization. Unknown names land in "others" (dining),
/// "remaining" (coffee) or "remaining" (study). Also assigns per-person
/// groups ("diner_1", "participant_1", ...) and fills `seating`.
std::map<std::string, std::vector<std::string>> categorize_objects(const Scene& scene, TaskFamily family,
                                                                   TaskContext& context);

/// Deterministic interpreter of the family's arrangement procedure.
/// Computes the groupings when `context.groups` is empty.
GroundGraph propose_program(const Scene& scene, TaskFamily family, TaskContext context);

/// Convenience: parse the scene instruction and run the interpreter.
GroundGraph propose_program(const Scene& scene, TaskFamily family);

/// Maps a diner-local atom into the frame of a diner seated at the back
/// edge: left/right and front/back relations are exchanged.
GroundAtom rotate_half_turn(const GroundAtom& atom);
/// Exchanges left and right relations only.
GroundAtom mirror_left_right(const GroundAtom& atom);

// ---------------------------------------------------------------------------
// Text-generation service

struct ChatMessage {
    std::string role;
    std::string content;
};

struct LlmSettings {
    std::string url;  // FORM_LLM_URL
    std::string api_key;  // FORM_LLM_KEY
    std::string model = "default";
    double timeout_s = 60.0;
    size_t attempts = 3;
    double backoff_s = 1.0;  // doubled after every failed attempt
    double rate_per_s = 1.0;  // token bucket refill
    double burst = 3.0;

    /// Reads FORM_LLM_URL and FORM_LLM_KEY.
    static LlmSettings from_environment();
};

class TransportError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// POSTs a JSON body and returns the response body. Throws TransportError.
using Transport = std::function<std::string(const LlmSettings&, const std::string& body)>;
Transport http_transport();

class LlmClient {
  public:
    explicit LlmClient(LlmSettings settings, Transport transport = http_transport());

    /// Sends the conversation and returns the assistant text. Retries
    /// transport failures with exponential backoff; throws ProposalFailed
    /// after the last attempt.
    std::string complete(const std::vector<ChatMessage>& messages);
    const LlmSettings& settings() const { return settings_; }

  private:
    LlmSettings settings_;
    Transport transport_;
};

struct ProposerBackend {
    enum class Kind { program, llm } kind = Kind::program;
    LlmSettings llm;
    size_t max_iterations = 3;
    /// Scenes with poses and instructions used as annotated examples.
    std::vector<Scene> examples;
    /// Test hook replacing the HTTP transport.
    Transport transport;
};

/// Four-part prompt: relation library, annotated examples, procedure
/// sketch, output instructions with the instance.
std::vector<ChatMessage> build_prompt(TaskFamily family, const std::vector<Scene>& examples, const Scene& scene,
                                      std::string_view instruction);

struct ParsedAtoms {
    std::vector<GroundAtom> atoms;
    std::vector<std::string> warnings;
};

/// Parses a bracketed list of string lists, e.g. [["left_of","a","b"], ...].
/// Malformed entries are skipped with a warning; never throws.
ParsedAtoms parse_atom_list(std::string_view text);

/// Keeps atoms valid for the scene; invalid ones become warnings.
GroundGraph validate_atoms(const ParsedAtoms& parsed, const Scene& scene, std::vector<std::string>& warnings);

struct Proposal {
    GroundGraph graph;
    std::vector<std::string> warnings;
};

/// Queries the service and parses its list. Throws ProposalFailed when no
/// valid atom survives or the service stays unreachable.
Proposal propose_llm(const Scene& scene, std::string_view instruction, TaskFamily family,
                     const ProposerBackend& backend);

struct ReflectionResult {
    GroundGraph graph;
    size_t iterations = 0;
    bool clean = false;
    std::vector<std::string> residual;  // remaining conflict / completeness issues
    std::vector<std::string> warnings;
};

/// Repairs conflicts and unconstrained objects for at most `max_iters`
/// rounds. Program backend: drop the later atom of each conflicting pair and
/// pin unconstrained objects with central_row + central_column. LLM backend:
/// re-prompt with the issue report.
ReflectionResult self_reflect(const GroundGraph& graph, const Scene& scene, const ProposerBackend& backend,
                              size_t max_iters, TaskFamily family = TaskFamily::dining_table,
                              std::string_view instruction = {});

/// Issue report lines for a graph (empty when clean).
std::vector<std::string> graph_issues(const GroundGraph& graph, const Scene& scene);

}  // namespace form
