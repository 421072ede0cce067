#include "pedaco/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pedaco/json_forms.hpp"
#include "text_util.hpp"

namespace pedaco::cli {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(const std::string& code) {
    return code == "gateway_error" || code == "render_failed" ? kExitGateway : kExitValidation;
}

std::string default_generation_prompt_text() {
    return prompt::assemble_generation_prompt(prompt::default_generation_config(), kContentPlaceholder);
}

std::string default_review_prompt_text() {
    // Assemble around a stand-in script, then swap the script slot for its marker.
    blueprint::ScriptBlueprint stand_in;
    stand_in.scenes.push_back({1, "x", "x"});
    std::string text = prompt::assemble_review_prompt(prompt::default_review_config(), kContentPlaceholder, stand_in);
    const std::string script = blueprint::serialize_blueprint(stand_in);
    text.replace(text.size() - script.size(), script.size(), std::string(kScriptPlaceholder) + "\n");
    return text;
}

namespace {

// File holding the id of the most recently created project.
constexpr const char* kCurrentFile = "CURRENT";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot read " + path, {{"path", path}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error("io_error", "cannot write " + path.string(), {{"path", path.string()}});
}

json read_json_file(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw Error("invalid_json", path + " is not valid JSON", {{"path", path}});
    return j;
}

struct Options {
    std::string project_dir = "projects";
    bool project_dir_set = false;
    bool mock = false;
    bool live = false;
    std::string config_file;
    std::string mock_fixtures;
    std::string project;
    bool json_output = false;

    // new
    std::string content_file;
    std::string gen_config_file;
    std::string review_config_file;
    std::string review_instructions;
    // review
    std::optional<std::string> extra;
    // apply
    bool apply_all = false;
    std::vector<std::string> picks;
    // edit
    std::string script_file;
    std::optional<int> base_revision;
    // config
    std::optional<int> max_scenes;
    // render
    std::optional<double> duration;
    // status
    bool show_script = false;
    // eval
    std::string ratings;
    std::string usability;
    std::string demographics;
    std::string item = "13";
    std::string partition = "gender";
    std::string group_map;
    // fixtures
    std::string out_dir = ".";
    // serve
    std::string host;
    std::optional<int> port;
};

class Session {
public:
    Session(const Options& opt, const CliEnv& env, std::ostream& out) : opt_(opt), env_(env), out_(out) {}

    studio::StudioConfig config() const {
        studio::StudioConfig cfg;
        if (!opt_.config_file.empty()) cfg = studio::StudioConfig::from_file(opt_.config_file);
        if (opt_.project_dir_set || opt_.config_file.empty()) cfg.store_root = opt_.project_dir;
        if (opt_.live) cfg.live = true;
        if (opt_.mock) cfg.live = false;
        if (!opt_.mock_fixtures.empty()) cfg.mock_fixtures = fs::path(opt_.mock_fixtures);
        if (cfg.live) {
            const auto from_env = env_.getenv ? gateway::GatewaySettings::from_env(env_.getenv)
                                              : gateway::GatewaySettings::from_env();
            if (!cfg.gateways.text) cfg.gateways.text = from_env.text;
            if (!cfg.gateways.video) cfg.gateways.video = from_env.video;
        }
        return cfg;
    }

    studio::StudioService& service() {
        if (!service_) {
            const auto cfg = config();
            root_ = cfg.store_root;
            service_ = std::make_unique<studio::StudioService>(cfg.store_root, studio::backends_for(cfg), env_.clock,
                                                               env_.ids);
        }
        return *service_;
    }

    std::string project_id() {
        service();
        if (!opt_.project.empty()) return opt_.project;
        const fs::path current = root_ / kCurrentFile;
        if (fs::exists(current)) {
            const std::string id(text::trim(read_file(current.string())));
            if (!id.empty()) return id;
        }
        const auto ids = service_->list_projects();
        if (ids.size() == 1) return ids.front();
        throw Error("invalid_request", ids.empty() ? "no project yet; run 'new' first"
                                                   : "several projects exist; pass --project <id>");
    }

    void remember(const std::string& id) { write_file(root_ / kCurrentFile, id + "\n"); }

    // Live backends answer 202; the CLI waits so every command is blocking.
    void report(const studio::Reply& reply, const std::string& id) {
        auto& svc = service();
        json data = reply.data;
        if (reply.status == 202) {
            svc.wait_idle();
            data = svc.progress(id);
            if (!data["last_error"].is_null()) {
                throw Error("gateway_error", data["last_error"].get<std::string>(), {{"id", id}});
            }
        }
        if (opt_.json_output) {
            out_ << data.dump(2) << '\n';
            return;
        }
        print_summary(svc.progress(id));
        if (data.contains("manifest")) {
            const auto manifest = data["manifest"].get<gateway::RenderManifest>();
            out_ << "clips    " << manifest.clips.size() << '\n';
            char total[32];
            std::snprintf(total, sizeof total, "%g", manifest.total_duration_s);
            out_ << "duration " << total << " s\n";
        }
    }

    void print_summary(const json& progress) {
        out_ << "project  " << progress["id"].get<std::string>() << '\n';
        out_ << "state    " << progress["state"]["kind"].get<std::string>();
        if (progress["state"]["awaiting"].get<bool>()) out_ << " (awaiting script)";
        out_ << '\n';
        out_ << "phase    " << progress["phase"].get<int>() << " (" << progress["step_label"].get<std::string>()
             << ")\n";
        out_ << "revision " << progress["revision_id"].get<int>() << '\n';
        if (!progress["last_error"].is_null()) out_ << "error    " << progress["last_error"].get<std::string>() << '\n';
    }

private:
    const Options& opt_;
    const CliEnv& env_;
    std::ostream& out_;
    fs::path root_;
    std::unique_ptr<studio::StudioService> service_;
};

json pick_json(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string index = colon == std::string::npos ? "" : spec.substr(0, colon);
    if (index.empty() || !text::all_digits(index) || index.size() > 6) {
        throw Error("invalid_request", "pick must look like <scene>:<field>, got '" + spec + "'");
    }
    const std::string field = spec.substr(colon + 1);
    if (!review::pick_target_from_string(field)) {
        throw review::ReviewError(review::ReviewErrc::unknown_field, "unknown pick field '" + field + "'",
                                  {{"field", field}});
    }
    return json{{"scene_index", std::stoi(index)}, {"field", field}};
}

void print_rows(std::ostream& out, bool as_json, const json& rows, const std::string& text) {
    if (as_json) {
        out << rows.dump(2) << '\n';
    } else {
        out << text;
    }
}

void run_eval(const std::string& kind, const Options& opt, std::ostream& out) {
    auto need = [](const std::string& path, const char* flag) {
        if (path.empty()) throw Error("invalid_request", std::string("missing ") + flag);
        return read_file(path);
    };
    if (kind == "improvement") {
        const auto rows = eval::improvement_table(eval::ingest_ratings(need(opt.ratings, "--ratings")));
        print_rows(out, opt.json_output, eval::to_json(rows), eval::render_improvement_text(rows));
        return;
    }
    if (kind == "topics") {
        std::string item = opt.item;
        if (!item.empty() && (item.front() == 'Q' || item.front() == 'q')) item.erase(0, 1);
        if (item.empty() || !text::all_digits(item) || item.size() > 2) {
            throw eval::EvalError(eval::EvalErrc::bad_value, "item must be Q1..Q13", {{"item", opt.item}});
        }
        const auto rows = eval::topic_table(eval::ingest_ratings(need(opt.ratings, "--ratings")), std::stoi(item));
        print_rows(out, opt.json_output, eval::to_json(rows), eval::render_topic_text(rows));
        return;
    }
    if (!opt.ratings.empty() && !opt.usability.empty()) {
        throw Error("invalid_request", "pass either --ratings or --usability, not both");
    }
    if (opt.ratings.empty() && opt.usability.empty()) throw Error("invalid_request", "missing --usability or --ratings");
    if (kind == "subgroup") {
        const auto partition = eval::partition_from_string(opt.partition);
        if (!partition) {
            throw eval::EvalError(eval::EvalErrc::bad_value, "partition must be gender, career or ai_usage",
                                  {{"partition", opt.partition}});
        }
        const auto groups = eval::parse_group_map(opt.group_map);
        const auto demographics = eval::ingest_demographics(need(opt.demographics, "--demographics"));
        const auto rows =
            opt.usability.empty()
                ? eval::subgroup_compare(eval::ingest_ratings(read_file(opt.ratings)), demographics, *partition, groups)
                : eval::subgroup_compare(eval::ingest_usability(read_file(opt.usability)), demographics, *partition,
                                         groups);
        print_rows(out, opt.json_output, eval::to_json(rows), eval::render_subgroup_text(rows));
        return;
    }
    const auto rows = opt.usability.empty() ? eval::descriptive(eval::ingest_ratings(read_file(opt.ratings)))
                                            : eval::descriptive(eval::ingest_usability(read_file(opt.usability)));
    print_rows(out, opt.json_output, eval::to_json(rows), eval::render_descriptive_text(rows));
}

int serve(Session& session, const Options& opt, std::ostream& out, std::ostream& err) {
    auto cfg = session.config();
    if (!opt.host.empty()) cfg.host = opt.host;
    if (opt.port) cfg.port = *opt.port;
    auto& svc = session.service();
    studio::HttpServer server(svc, cfg.cors_origin);
    const int port = server.bind(cfg.host, cfg.port);
    if (port < 0) {
        err << "error: io_error: cannot bind " << cfg.host << ":" << cfg.port << '\n';
        return kExitValidation;
    }
    out << "listening on http://" << cfg.host << ":" << port << " (store " << cfg.store_root.string() << ", "
        << (cfg.live ? "live" : "mock") << " backends)" << std::endl;
    server.run();
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliEnv& env) {
    Options opt;
    CLI::App app{"Scene-script authoring pipeline: generate, review, apply, render, evaluate.", "pedaco"};
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--project-dir", opt.project_dir, "Project store directory")
        ->each([&](const std::string&) { opt.project_dir_set = true; });
    auto* mock = app.add_flag("--mock", opt.mock, "Use the mock text and video backends (default)");
    app.add_flag("--live", opt.live, "Use the HTTP backends from config or environment")->excludes(mock);
    app.add_option("--config", opt.config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--mock-fixtures", opt.mock_fixtures, "JSON map of prompt hash to canned response")
        ->check(CLI::ExistingFile);
    app.add_option("--project", opt.project, "Project id (defaults to the last one created)");
    app.add_flag("--json", opt.json_output, "Print JSON instead of text");

    auto* c_new = app.add_subcommand("new", "Create a project from learning content");
    c_new->add_option("--content", opt.content_file, "Learning content text file")->required()->check(CLI::ExistingFile);
    c_new->add_option("--gen-config", opt.gen_config_file, "JSON patch over the default generation prompt");
    c_new->add_option("--review-config", opt.review_config_file, "JSON patch over the default review prompt");
    c_new->add_option("--review-instructions", opt.review_instructions, "Extra reviewer instructions");

    app.add_subcommand("list", "List projects");
    app.add_subcommand("generate", "Generate the first script draft");

    auto* c_review = app.add_subcommand("review", "Request a review of the current script");
    c_review->add_option("--extra", opt.extra, "Extra review instructions (empty clears them)");

    auto* c_apply = app.add_subcommand("apply", "Apply the latest review");
    auto* all = c_apply->add_flag("--all", opt.apply_all, "Accept every change");
    c_apply->add_option("--pick", opt.picks, "Accept one change: <scene>:<visual_description|narration|scene>")
        ->excludes(all);

    auto* c_edit = app.add_subcommand("edit", "Replace the script with a manual edit");
    c_edit->add_option("--script", opt.script_file, "Script text file")->required()->check(CLI::ExistingFile);
    c_edit->add_option("--base-revision", opt.base_revision, "Reject the edit unless this is the latest revision");

    auto* c_config = app.add_subcommand("config", "Change prompt settings");
    c_config->add_option("--gen-config", opt.gen_config_file, "JSON patch over the generation prompt");
    c_config->add_option("--review-config", opt.review_config_file, "JSON patch over the review prompt");
    c_config->add_option("--max-scenes", opt.max_scenes, "Scene limit for generation")->check(CLI::PositiveNumber);

    app.add_subcommand("finalize", "Pin the current script for rendering");

    auto* c_render = app.add_subcommand("render", "Render one clip per scene");
    c_render->add_option("--duration", opt.duration, "Seconds per scene")->check(CLI::PositiveNumber);

    app.add_subcommand("reopen", "Return a rendered or failed project to editing");

    auto* c_status = app.add_subcommand("status", "Show project state");
    c_status->add_flag("--script", opt.show_script, "Also print the current script");

    auto* c_eval = app.add_subcommand("eval", "Study data reports");
    c_eval->require_subcommand(1);
    for (const char* name : {"improvement", "topics", "subgroup", "descriptive"}) {
        auto* sub = c_eval->add_subcommand(name);
        sub->fallthrough();
        sub->add_option("--ratings", opt.ratings, "Ratings CSV")->check(CLI::ExistingFile);
        if (std::string(name) == "topics") sub->add_option("--item", opt.item, "Item for the per-topic table (Q1..Q13)");
        if (std::string(name) == "subgroup" || std::string(name) == "descriptive") {
            sub->add_option("--usability", opt.usability, "Usability CSV")->check(CLI::ExistingFile);
        }
        if (std::string(name) == "subgroup") {
            sub->add_option("--demographics", opt.demographics, "Demographics CSV")->check(CLI::ExistingFile);
            sub->add_option("--partition", opt.partition, "gender | career | ai_usage");
            sub->add_option("--group-map", opt.group_map, "Value-to-group map, e.g. \"a=x,b=x,c=y\"");
        }
    }
    c_eval->fallthrough();

    auto* c_fixtures = app.add_subcommand("fixtures", "Fixture utilities");
    c_fixtures->require_subcommand(1);
    auto* emit = c_fixtures->add_subcommand("emit-prompts", "Write the default prompts with placeholder slots");
    emit->add_option("--out", opt.out_dir, "Output directory");
    c_fixtures->fallthrough();

    auto* c_serve = app.add_subcommand("serve", "Run the HTTP API");
    c_serve->add_option("--host", opt.host, "Listen address");
    c_serve->add_option("--port", opt.port, "Listen port (0 picks a free one)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    Session session(opt, env, out);
    try {
        if (c_new->parsed()) {
            json body{{"content", read_file(opt.content_file)}};
            if (!opt.gen_config_file.empty()) body["gen_config"] = read_json_file(opt.gen_config_file);
            if (!opt.review_config_file.empty()) body["review_config"] = read_json_file(opt.review_config_file);
            if (!opt.review_instructions.empty()) body["review_instructions"] = opt.review_instructions;
            const auto reply = session.service().create_project(body);
            const std::string id = reply.data["id"].get<std::string>();
            session.remember(id);
            session.report(reply, id);
        } else if (app.got_subcommand("list")) {
            const auto ids = session.service().list_projects();
            if (opt.json_output) {
                out << json(ids).dump(2) << '\n';
            } else {
                for (const auto& id : ids) {
                    const auto p = session.service().progress(id);
                    out << id << "  " << p["state"]["kind"].get<std::string>() << "  rev "
                        << p["revision_id"].get<int>() << '\n';
                }
            }
        } else if (app.got_subcommand("generate")) {
            const auto id = session.project_id();
            session.report(session.service().generate(id), id);
        } else if (c_review->parsed()) {
            const auto id = session.project_id();
            json body = json::object();
            if (opt.extra) body["extra"] = *opt.extra;
            session.report(session.service().review(id, body), id);
        } else if (c_apply->parsed()) {
            const auto id = session.project_id();
            json body{{"mode", "all"}};
            if (!opt.picks.empty()) {
                body["mode"] = "selective";
                body["picks"] = json::array();
                for (const auto& p : opt.picks) body["picks"].push_back(pick_json(p));
            }
            session.report(session.service().apply(id, body), id);
        } else if (c_edit->parsed()) {
            const auto id = session.project_id();
            json body{{"script", read_file(opt.script_file)}};
            if (opt.base_revision) body["base_revision_id"] = *opt.base_revision;
            session.report(session.service().edit_script(id, body), id);
        } else if (c_config->parsed()) {
            const auto id = session.project_id();
            json body = json::object();
            if (!opt.gen_config_file.empty()) body["gen_config"] = read_json_file(opt.gen_config_file);
            if (!opt.review_config_file.empty()) body["review_config"] = read_json_file(opt.review_config_file);
            if (opt.max_scenes) body["gen_config"]["max_scenes"] = *opt.max_scenes;
            session.report(session.service().update_config(id, body), id);
        } else if (app.got_subcommand("finalize")) {
            const auto id = session.project_id();
            session.report(session.service().finalize(id), id);
        } else if (c_render->parsed()) {
            const auto id = session.project_id();
            json body = json::object();
            if (opt.duration) body["per_scene_duration_s"] = *opt.duration;
            session.report(session.service().render(id, body), id);
        } else if (app.got_subcommand("reopen")) {
            const auto id = session.project_id();
            session.report(session.service().reopen(id), id);
        } else if (c_status->parsed()) {
            const auto id = session.project_id();
            auto& svc = session.service();
            if (opt.json_output) {
                out << workflow::project_to_json(svc.get_project(id)).dump(2) << '\n';
            } else {
                const auto progress = svc.progress(id);
                session.print_summary(progress);
                std::vector<std::string> legal;
                for (const auto& e : progress["legal_events"]) legal.push_back(e.get<std::string>());
                out << "next     " << (legal.empty() ? "-" : text::join(legal, ", ")) << '\n';
                if (opt.show_script) {
                    const auto p = svc.get_project(id);
                    if (p.latest()) out << '\n' << blueprint::serialize_blueprint(p.latest()->blueprint) << '\n';
                }
            }
        } else if (c_eval->parsed()) {
            for (auto* sub : c_eval->get_subcommands()) run_eval(sub->get_name(), opt, out);
        } else if (emit->parsed()) {
            const fs::path dir = opt.out_dir;
            write_file(dir / "generation_default.txt", default_generation_prompt_text());
            write_file(dir / "review_default.txt", default_review_prompt_text());
            out << (dir / "generation_default.txt").string() << '\n' << (dir / "review_default.txt").string() << '\n';
        } else if (c_serve->parsed()) {
            return serve(session, opt, out, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.code() << ": " << e.what() << '\n';
        if (!e.detail().empty()) err << "detail: " << e.detail().dump() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: internal_error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitOk;
}

} // namespace pedaco::cli
