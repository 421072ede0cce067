#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

namespace pedaco {

// Base for every domain error. `code` is a stable snake_case token shared by
// the CLI exit mapping and the HTTP error envelope.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, nlohmann::json detail = nlohmann::json::object())
        : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

    const std::string& code() const noexcept { return code_; }
    const nlohmann::json& detail() const noexcept { return detail_; }

private:
    std::string code_;
    nlohmann::json detail_;
};

} // namespace pedaco
