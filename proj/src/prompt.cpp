#include "pedaco/prompt.hpp"

#include <algorithm>

#include "text_util.hpp"

namespace pedaco::prompt {

namespace {

std::vector<DirectiveGroup> shared_groups(std::string visuals_first_directive) {
    return {
        {"Coherence",
         {"Background music should not be used.",
          "The learning content must be preserved in both the narration and the video.",
          "The content of the video and the learning content must be directly related.",
          "The content of the narration and the learning content must be directly related."}},
        {"Modality & Redundancy",
         {"Use images or voice-over narration instead of on-screen text.",
          "Educational content included in the narration should have minimal corresponding text displayed on the "
          "screen."}},
        {"Learner-Friendly",
         {"The narration script should be written in a friendly and gentle conversational style.",
          "Use a first-person, informal, and conversational tone.",
          "Use a standard human voice rather than a machine voice."}},
        {"Contiguity",
         {"Write the script so that narration and visuals are synchronized in time and aligned in meaning.",
          "Place related text and graphics close to each other on the screen."}},
        {"Visuals",
         {std::move(visuals_first_directive),
          "Only describe scenes that directly aid in understanding the learning content; exclude decorative or "
          "irrelevant visuals.",
          "Use signaling cues (arrows, highlight colors, bold text, etc.) to direct attention to important "
          "information.",
          "Avoid displaying the speaker's face continuously; prioritize visuals that explain the content."}},
        {"Learning Flow",
         {"Avoid presenting too much information in a single scene; spread it out over multiple scenes.",
          "Introduce key terms and concepts early (e.g., in Scene 1-2) before presenting complex content."}},
    };
}

std::string criteria_block(const PromptConfig& config, std::optional<std::string_view> extra) {
    std::string out = "<Principles>\n";
    int number = 0;
    for (const auto& group : config.groups) {
        if (!group.enabled) continue;
        out += std::to_string(++number) + ". " + group.title + "\n";
        for (const auto& directive : group.directives) out += "- " + directive + "\n";
    }

    out += "\n<Constraints>\n";
    const auto constraints = effective_constraints(config);
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        out += std::to_string(i + 1) + ". " + constraints[i] + "\n";
    }

    if (config.custom_instructions) {
        if (auto custom = text::trim(*config.custom_instructions); !custom.empty()) {
            out += "\n<Custom Instructions>\n" + std::string(custom) + "\n";
        }
    }
    if (extra) {
        if (auto more = text::trim(*extra); !more.empty()) {
            out += "\n<Additional Review Instructions>\n" + std::string(more) + "\n";
        }
    }
    return out;
}

std::string_view checked_content(std::string_view content) {
    auto trimmed = text::trim(content);
    if (trimmed.empty()) throw PromptError(PromptErrc::empty_content, "learning content is empty");
    return trimmed;
}

std::string_view checked_format(const PromptConfig& config) {
    auto format = text::trim(config.output_format);
    if (format.empty()) throw PromptError(PromptErrc::invalid_config, "output format is empty");
    return format;
}

std::string lead(const PromptConfig& config) {
    auto preamble = text::trim(config.preamble);
    return preamble.empty() ? std::string() : std::string(preamble) + "\n\n";
}

} // namespace

std::string_view to_string(Category category) {
    switch (category) {
    case Category::reduce_extraneous: return "reduce_extraneous";
    case Category::manage_essential: return "manage_essential";
    case Category::foster_generative: return "foster_generative";
    }
    return "reduce_extraneous";
}

std::string_view to_string(Mode mode) { return mode == Mode::generation ? "generation" : "review"; }

std::optional<Mode> mode_from_string(std::string_view name) {
    if (name == "generation") return Mode::generation;
    if (name == "review") return Mode::review;
    return std::nullopt;
}

std::string_view to_string(PromptErrc code) {
    switch (code) {
    case PromptErrc::empty_content: return "empty_content";
    case PromptErrc::empty_blueprint: return "empty_blueprint";
    case PromptErrc::invalid_config: return "invalid_config";
    }
    return "invalid_config";
}

PromptError::PromptError(PromptErrc kind, const std::string& message)
    : Error(std::string(to_string(kind)), message), kind_(kind) {}

const std::vector<Principle>& principle_registry() {
    static const std::vector<Principle> registry = {
        {"coherence", "Coherence", Category::reduce_extraneous, "Exclude extraneous, irrelevant material.",
         "Reduce cognitive load by preventing distraction from non-essential information."},
        {"signaling", "Signaling", Category::reduce_extraneous, "Highlight essential information.",
         "Direct the learner's limited attention to critical elements."},
        {"redundancy", "Redundancy", Category::reduce_extraneous,
         "Avoid presenting identical information simultaneously in text and narration.",
         "Prevent overload from processing redundant verbal information in two channels."},
        {"spatial_contiguity", "Spatial Contiguity", Category::reduce_extraneous,
         "Place corresponding words and pictures near each other on the screen.",
         "Reduce the cognitive effort needed to mentally integrate related information."},
        {"temporal_contiguity", "Temporal Contiguity", Category::reduce_extraneous,
         "Present corresponding words and pictures at the same time.",
         "Reduce the cognitive load of holding information in working memory while waiting for the other part."},
        {"segmenting", "Segmenting", Category::manage_essential,
         "Break the lesson into smaller, learner-paced segments.",
         "Help manage the complexity of the material by allowing learners to process one at a time."},
        {"pre_training", "Pre-training", Category::manage_essential,
         "Introduce key concepts and their names before the lesson.",
         "Activate relevant prior knowledge and reduce the load during the main lesson."},
        {"modality", "Modality", Category::manage_essential,
         "Present words as narration rather than on-screen text, especially for complex visuals.",
         "Distribute cognitive processing across both visual and auditory channels, avoiding overload in the visual "
         "channel."},
        {"multimedia", "Multimedia", Category::foster_generative,
         "Present information using both words and pictures rather than words alone.",
         "Encourage learners to build connections between visual and verbal mental models."},
        {"personalization", "Personalization", Category::foster_generative, "Use a conversational and informal tone.",
         "Promote social engagement, which encourages deeper cognitive processing."},
        {"voice", "Voice", Category::foster_generative, "Use a human voice for narration rather than a machine voice.",
         "A human voice can better convey social cues so that learners engage with the material."},
        {"image", "Image", Category::foster_generative,
         "Use clear, high-quality visuals that are directly relevant to the content, and avoid extraneous or "
         "technically poor images (e.g., an unnecessary \"talking head\").",
         "Ensure the learner's cognitive resources are focused on understanding the content, rather than being "
         "diverted by processing irrelevant social cues (from an instructor's image) or deciphering technically poor "
         "visuals."},
    };
    return registry;
}

const Principle* find_principle(std::string_view id) {
    const auto& registry = principle_registry();
    auto it = std::find_if(registry.begin(), registry.end(), [&](const Principle& p) { return p.id == id; });
    return it == registry.end() ? nullptr : &*it;
}

PromptConfig default_generation_config() {
    PromptConfig config;
    config.mode = Mode::generation;
    config.groups = shared_groups("Descriptions of video scenes should be clear.");
    config.constraints = {"Assign a suitable length of narration to a scene.",
                          "Maximum scene count: Make your own judgment."};
    config.output_format =
        "<Scene 1>\n"
        "Visual Description: ...\n"
        "Clear Narration: ...\n"
        "\n"
        "<Scene N>\n"
        "Visual Description: ...\n"
        "Clear Narration: ...";
    return config;
}

PromptConfig default_review_config() {
    PromptConfig config;
    config.mode = Mode::review;
    config.preamble =
        "You are an expert reviewer who meticulously examines and provides feedback on educational video scripts. "
        "Referring to all the instructions below, review the provided [Video Generation Script] to ensure it "
        "accurately reflects the [Learning Content] and complies with all [Constraints and Principles]. After a "
        "detailed review, write a revised script.";
    config.groups = shared_groups("Descriptions of video scenes should be clear, specific, and of professional quality.");
    config.constraints = {"Assign only one narration sentence to a single scene.",
                          "Maximum scene count: Make your own judgment."};
    config.output_format =
        "Detailed Review Results:\n"
        "Suggestions for Improvement: (Point out specific scene numbers where the learning content is inadequately "
        "reflected or where principles are violated, and propose clear revision plans.)\n"
        "Revised Script: (Output the entire final script reflecting all the suggested improvements.)";
    return config;
}

std::vector<std::string> effective_constraints(const PromptConfig& config) {
    std::vector<std::string> constraints = config.constraints;
    if (!config.max_scenes) return constraints;
    if (*config.max_scenes < 1) throw PromptError(PromptErrc::invalid_config, "max_scenes must be at least 1");
    const std::string line = std::string(kMaxSceneCountPrefix) + " " + std::to_string(*config.max_scenes) + ".";
    auto it = std::find_if(constraints.begin(), constraints.end(),
                           [](const std::string& c) { return text::starts_with(c, kMaxSceneCountPrefix); });
    if (it != constraints.end()) {
        *it = line;
    } else {
        constraints.push_back(line);
    }
    return constraints;
}

std::string assemble_generation_prompt(const PromptConfig& config, std::string_view content) {
    const auto body = checked_content(content);
    const auto format = checked_format(config);
    std::string out = lead(config);
    out += "[Principles and Constraints for Educational Video Production]\n\n";
    out += criteria_block(config, std::nullopt);
    out += "\n" + std::string(kOutputFormatHeader) + "\n\n" + std::string(format) + "\n";
    out += "\n" + std::string(kLearningContentHeader) + "\n\n" + std::string(body) + "\n";
    return out;
}

std::string assemble_review_prompt(const PromptConfig& config, std::string_view content,
                                   const blueprint::ScriptBlueprint& bp, std::optional<std::string_view> extra) {
    const auto body = checked_content(content);
    if (bp.empty()) throw PromptError(PromptErrc::empty_blueprint, "there is no script to review");
    const auto format = checked_format(config);
    std::string out = lead(config);
    out += "[Review Criteria]\n\n";
    out += criteria_block(config, extra);
    out += "\n" + std::string(kOutputFormatHeader) + "\n\n" + std::string(format) + "\n";
    out += "\n" + std::string(kLearningContentHeader) + "\n\n" + std::string(body) + "\n";
    out += "\n" + std::string(kScriptHeader) + "\n\n" + blueprint::serialize_blueprint(bp);
    return out;
}

} // namespace pedaco::prompt
