#include <sosgap/sosgap.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

using nlohmann::json;

namespace {
    constexpr int kUsage = 2;

    struct Text {
        char * p = nullptr;
        ~Text() { sosgap_free(p); }
        auto str() const -> std::string { return p ? p : ""; }
    };

    auto fail(sosgap_status s) -> int
    {
        std::cerr << "error (" << sosgap_status_name(s) << "): " << sosgap_last_error() << '\n';
        return s == SOSGAP_ERR_CONFIG || s == SOSGAP_ERR_INPUT ? kUsage : 1;
    }

    auto emit(const std::string & text, const std::string & path) -> bool
    {
        if (path.empty() || path == "-") {
            std::cout << text;
            if (! text.empty() && text.back() != '\n')
                std::cout << '\n';
            return true;
        }
        std::ofstream out(path);
        out << text;
        if (! text.empty() && text.back() != '\n')
            out << '\n';
        return static_cast<bool>(out);
    }

    // "0..9" (inclusive) or "0,3,7"
    auto parse_seeds(const std::string & text) -> json
    {
        json out = json::array();
        if (auto dots = text.find(".."); dots != std::string::npos) {
            auto first = std::stoull(text.substr(0, dots));
            auto last = std::stoull(text.substr(dots + 2));
            if (last < first)
                throw std::invalid_argument("empty seed range");
            for (auto s = first; s <= last; ++s)
                out.push_back(s);
            return out;
        }
        std::stringstream ss(text);
        for (std::string item; std::getline(ss, item, ',');)
            out.push_back(std::stoull(item));
        return out;
    }

    struct ConfigFlags {
        std::string config_path;
        std::string predicate;
        std::optional<int> n;
        std::vector<std::string> m;
        std::vector<std::string> m_ratio;
        std::vector<std::string> gamma;
        std::string seeds;
        std::string t;
        std::optional<int> radius;
        std::string epsilon;
        std::string e1;
        std::string e2;
        std::string s1;
        std::optional<int> consistency_size;
        std::optional<int> conditional_samples;
        std::optional<int> conditional_max_x;
        std::optional<int> conditional_graph_families;
        bool run_uncertified = false;
        bool allow_repeats = false;
        std::string negative_control;
        std::optional<double> log2_budget;
        std::optional<std::uint64_t> enumeration_budget;
        std::optional<std::uint64_t> gbad_budget;
        bool no_timings = false;

        auto attach(CLI::App & app) -> void
        {
            app.add_option("--config", config_path, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
            app.add_option("--predicate", predicate, "predicate name (parity3, or3, nae3, ...) or JSON");
            app.add_option("--n", n, "number of variables");
            app.add_option("--m", m, "constraint counts")->delimiter(',');
            app.add_option("--m-ratio", m_ratio, "m = ratio * n, e.g. 1/2,1,2")->delimiter(',');
            app.add_option("--gamma", gamma, "m = floor(n^gamma), e.g. 3/2")->delimiter(',');
            app.add_option("--seeds", seeds, "seed list: 0..9 or 1,4,7");
            app.add_option("--t", t, "t (default cmplx(P))");
            app.add_option("--radius", radius, "locality radius r");
            app.add_option("--epsilon", epsilon, "expansion margin, e.g. 1/2");
            app.add_option("--e1", e1, "closure expansion e1 (default auto)");
            app.add_option("--e2", e2, "closure expansion e2 (default auto)");
            app.add_option("--s1", s1, "closure size s1 or auto");
            app.add_option("--consistency-size", consistency_size, "check consistency on all sets up to this size");
            app.add_option("--conditional-samples", conditional_samples, "(X, alpha) samples per seed");
            app.add_option("--conditional-max-x", conditional_max_x, "largest |X|");
            app.add_option("--conditional-graph-families", conditional_graph_families, "conditional families with a correlation check");
            app.add_flag("--run-uncertified", run_uncertified, "run checks on uncertified seeds (reported only)");
            app.add_flag("--allow-repeats", allow_repeats, "draw scopes from [n]^k");
            app.add_option("--negative-control", negative_control, "none or corrupt")->check(CLI::IsMember({"none", "corrupt"}));
            app.add_option("--log2-budget", log2_budget, "log2 of the exhaustive enumeration budget");
            app.add_option("--enumeration-budget", enumeration_budget, "connected subsets visited per pair");
            app.add_option("--gbad-budget", gbad_budget, "connected subsets visited per G_bad construction");
            app.add_flag("--no-timings", no_timings, "omit timing fields for byte-stable output");
        }

        auto build() const -> json
        {
            json j = json::object();
            if (! config_path.empty()) {
                std::ifstream in(config_path);
                j = json::parse(in, nullptr, false);
                if (j.is_discarded() || ! j.is_object())
                    throw std::invalid_argument("config file is not a JSON object");
            }
            if (! predicate.empty()) {
                auto p = json::parse(predicate, nullptr, false);
                j["predicate"] = p.is_discarded() ? json(predicate) : p;
            }
            if (n)
                j["n"] = *n;
            json schedule = json::array();
            for (auto & v : m)
                schedule.push_back(v);
            for (auto & v : m_ratio)
                schedule.push_back("ratio:" + v);
            for (auto & v : gamma)
                schedule.push_back("gamma:" + v);
            if (! schedule.empty()) {
                j.erase("m");
                j["m_schedule"] = schedule;
            }
            if (! seeds.empty())
                j["seeds"] = parse_seeds(seeds);
            if (! t.empty())
                j["t"] = t == "auto" ? json("auto") : json(std::stoi(t));
            if (radius)
                j["radius"] = *radius;
            if (! epsilon.empty())
                j["epsilon"] = epsilon;
            if (! e1.empty())
                j["e1"] = e1;
            if (! e2.empty())
                j["e2"] = e2;
            if (! s1.empty())
                j["s1"] = s1 == "auto" ? json("auto") : json(std::stoi(s1));
            if (consistency_size)
                j["consistency_size"] = *consistency_size;
            if (conditional_samples)
                j["conditional_samples"] = *conditional_samples;
            if (conditional_max_x)
                j["conditional_max_x"] = *conditional_max_x;
            if (conditional_graph_families)
                j["conditional_graph_families"] = *conditional_graph_families;
            if (run_uncertified)
                j["run_uncertified"] = true;
            if (allow_repeats)
                j["allow_repeats"] = true;
            if (! negative_control.empty())
                j["negative_control"] = negative_control;
            if (log2_budget)
                j["log2_budget"] = *log2_budget;
            if (enumeration_budget)
                j["enumeration_budget"] = *enumeration_budget;
            if (gbad_budget)
                j["gbad_budget"] = *gbad_budget;
            if (no_timings)
                j["timings"] = false;
            return j;
        }
    };

    auto load_config(const ConfigFlags & flags, std::string & report_path, std::string & csv_path, sosgap_config ** out) -> sosgap_status
    {
        json j;
        try {
            j = flags.build();
        }
        catch (const std::exception & e) {
            std::cerr << "error (config): " << e.what() << '\n';
            return SOSGAP_ERR_CONFIG;
        }
        if (report_path.empty() && j.contains("report_path"))
            report_path = j["report_path"].get<std::string>();
        if (csv_path.empty() && j.contains("csv_path"))
            csv_path = j["csv_path"].get<std::string>();
        auto s = sosgap_config_from_json(j.dump().c_str(), out);
        if (s != SOSGAP_OK)
            return s;
        return SOSGAP_OK;
    }
}

int main(int argc, char ** argv)
{
    CLI::App app{"Exact finite-scale checks of Sherali-Adams+ and static LS+ pseudo-distributions on random CSPs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sosgap_version()));

    auto * predicate_cmd = app.add_subcommand("predicate", "report cmplx(P) and t-wise witnesses");
    std::string predicate_name;
    predicate_cmd->add_option("predicate", predicate_name, "name or JSON")->required();

    auto * gen_cmd = app.add_subcommand("gen", "generate a random instance as JSON");
    std::string gen_predicate = "parity3";
    int gen_n = 24, gen_m = 24;
    std::uint64_t gen_seed = 0;
    bool gen_repeats = false;
    std::string gen_out;
    gen_cmd->add_option("--predicate", gen_predicate);
    gen_cmd->add_option("--n", gen_n)->required();
    gen_cmd->add_option("--m", gen_m)->required();
    gen_cmd->add_option("--seed", gen_seed);
    gen_cmd->add_flag("--allow-repeats", gen_repeats);
    gen_cmd->add_option("-o,--output", gen_out, "output file (default stdout)");

    auto * run_cmd = app.add_subcommand("run", "run the verification pipeline; exit 0 iff no counted check failed");
    ConfigFlags run_flags;
    run_flags.attach(*run_cmd);
    std::string report_path;
    bool quiet = false;
    run_cmd->add_option("--report", report_path, "report JSON path (default stdout)");
    run_cmd->add_flag("-q,--quiet", quiet, "no per-seed summary on stderr");

    auto * sweep_cmd = app.add_subcommand("sweep", "run the pipeline over an m-schedule and write CSV");
    ConfigFlags sweep_flags;
    sweep_flags.attach(*sweep_cmd);
    std::string csv_path;
    sweep_cmd->add_option("--csv", csv_path, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError & e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    if (predicate_cmd->parsed()) {
        Text out;
        if (auto s = sosgap_predicate_report(predicate_name.c_str(), &out.p); s != SOSGAP_OK)
            return fail(s);
        emit(out.str(), "");
        return 0;
    }
    if (gen_cmd->parsed()) {
        Text out;
        if (auto s = sosgap_generate(gen_predicate.c_str(), gen_n, gen_m, gen_seed, gen_repeats, &out.p); s != SOSGAP_OK)
            return fail(s);
        return emit(out.str(), gen_out) ? 0 : 1;
    }

    auto & flags = run_cmd->parsed() ? run_flags : sweep_flags;
    std::string unused;
    sosgap_config * config = nullptr;
    auto s = run_cmd->parsed() ? load_config(flags, report_path, unused, &config) : load_config(flags, unused, csv_path, &config);
    if (s != SOSGAP_OK)
        return s == SOSGAP_ERR_CONFIG && ! config && *sosgap_last_error() == '\0' ? kUsage : fail(s);
    std::unique_ptr<sosgap_config, decltype(&sosgap_config_destroy)> config_guard{config, sosgap_config_destroy};

    if (sweep_cmd->parsed()) {
        Text csv;
        if (auto st = sosgap_sweep_csv(config, &csv.p); st != SOSGAP_OK)
            return fail(st);
        return emit(csv.str(), csv_path) ? 0 : 1;
    }

    sosgap_report * report = nullptr;
    if (auto st = sosgap_run(config, &report); st != SOSGAP_OK)
        return fail(st);
    std::unique_ptr<sosgap_report, decltype(&sosgap_report_destroy)> report_guard{report, sosgap_report_destroy};
    Text text;
    if (auto st = sosgap_report_json(report, 2, &text.p); st != SOSGAP_OK)
        return fail(st);
    if (! quiet) {
        auto j = json::parse(text.str());
        for (auto & seed : j["seeds"]) {
            std::cerr << "n=" << seed["n"] << " m=" << seed["m"] << " seed=" << seed["seed"] << " certified=" << seed["certified"]
                      << " status=" << seed["status"].get<std::string>();
            for (auto & c : seed["checks"])
                if (c["status"] != "pass" && c["status"] != "skipped")
                    std::cerr << ' ' << c["name"].get<std::string>() << '=' << c["status"].get<std::string>();
            std::cerr << '\n';
        }
    }
    if (! emit(text.str(), report_path))
        return 1;
    return sosgap_report_exit_code(report);
}
