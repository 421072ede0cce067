#pragma once

// Command-line front end. Lives in the library so tests can drive it
// in-process; tools/pedaco.cpp only forwards argv.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pedaco/studio.hpp"

namespace pedaco::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitGateway = 2;

// Exit status for an error code: 2 for backend failures, else 1.
int exit_code_for(const std::string& code);

// Slot markers used by `fixtures emit-prompts`.
inline constexpr const char* kContentPlaceholder = "<Insert the learning content here.>";
inline constexpr const char* kScriptPlaceholder = "<Insert the video generation script here.>";

// Default generation and review prompts with placeholder slots.
std::string default_generation_prompt_text();
std::string default_review_prompt_text();

// Injection points for deterministic runs.
struct CliEnv {
    studio::Clock clock = studio::system_clock_seconds;
    studio::IdSource ids = studio::random_project_id;
    std::function<std::optional<std::string>(const char*)> getenv;
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliEnv& env = {});

} // namespace pedaco::cli
