#include <sosgap/sosgap.h>

#include <sosgap/pipeline.hpp>

#include <cstdlib>
#include <cstring>
#include <memory>

using nlohmann::json;

struct sosgap_config {
    sosgap::PipelineConfig config;
};

struct sosgap_report {
    explicit sosgap_report(sosgap::PipelineReport r) : report(std::move(r)) {}
    sosgap::PipelineReport report;
};

namespace {
    thread_local std::string last_error;

    auto status_of(const std::exception & e) -> sosgap_status
    {
        using namespace sosgap;
        if (dynamic_cast<const ConfigError *>(&e))
            return SOSGAP_ERR_CONFIG;
        if (dynamic_cast<const InputError *>(&e) || dynamic_cast<const json::exception *>(&e))
            return SOSGAP_ERR_INPUT;
        if (dynamic_cast<const BudgetError *>(&e))
            return SOSGAP_ERR_BUDGET;
        if (dynamic_cast<const LocalityError *>(&e))
            return SOSGAP_ERR_LOCALITY;
        if (dynamic_cast<const LocalContradiction *>(&e))
            return SOSGAP_ERR_CONTRADICTION;
        if (dynamic_cast<const UndefinedValue *>(&e))
            return SOSGAP_ERR_UNDEFINED;
        if (dynamic_cast<const UnsupportedForm *>(&e))
            return SOSGAP_ERR_UNSUPPORTED;
        if (dynamic_cast<const InvariantError *>(&e))
            return SOSGAP_ERR_INVARIANT;
        return SOSGAP_ERR_INTERNAL;
    }

    template <typename Fn>
    auto guarded(Fn && fn) -> sosgap_status
    {
        try {
            fn();
            last_error.clear();
            return SOSGAP_OK;
        }
        catch (const std::exception & e) {
            last_error = e.what();
            return status_of(e);
        }
        catch (...) {
            last_error = "unknown error";
            return SOSGAP_ERR_INTERNAL;
        }
    }

    auto copy_out(const std::string & s) -> char *
    {
        auto * out = static_cast<char *>(std::malloc(s.size() + 1));
        if (! out)
            throw std::bad_alloc();
        std::memcpy(out, s.c_str(), s.size() + 1);
        return out;
    }

    auto require(const void * p, const char * what) -> void
    {
        if (! p)
            throw sosgap::InputError(std::string("null ") + what);
    }

    auto predicate_arg(const char * text) -> sosgap::Predicate
    {
        require(text, "predicate");
        auto j = json::parse(text, nullptr, false);
        if (j.is_discarded())
            j = std::string(text);
        return sosgap::Predicate::from_json(j);
    }
}

extern "C" {

const char * sosgap_version(void)
{
    return "0.1.0";
}

const char * sosgap_status_name(sosgap_status status)
{
    switch (status) {
    case SOSGAP_OK:
        return "ok";
    case SOSGAP_ERR_INPUT:
        return "input";
    case SOSGAP_ERR_CONFIG:
        return "config";
    case SOSGAP_ERR_BUDGET:
        return "budget";
    case SOSGAP_ERR_LOCALITY:
        return "locality";
    case SOSGAP_ERR_CONTRADICTION:
        return "contradiction";
    case SOSGAP_ERR_UNDEFINED:
        return "undefined";
    case SOSGAP_ERR_UNSUPPORTED:
        return "unsupported";
    case SOSGAP_ERR_INVARIANT:
        return "invariant";
    case SOSGAP_ERR_INTERNAL:
        return "internal";
    }
    return "unknown";
}

const char * sosgap_last_error(void)
{
    return last_error.c_str();
}

void sosgap_free(char * text)
{
    std::free(text);
}

sosgap_status sosgap_predicate_report(const char * predicate, char ** out_json)
{
    return guarded([&] {
        require(out_json, "output");
        *out_json = copy_out(sosgap::report_predicate(predicate_arg(predicate)).dump(2));
    });
}

sosgap_status sosgap_generate(const char * predicate, int n, int m, uint64_t seed, int allow_repeats, char ** out_json)
{
    return guarded([&] {
        require(out_json, "output");
        auto inst = sosgap::generate(predicate_arg(predicate), n, m, seed, sosgap::ModelFlags{allow_repeats != 0});
        *out_json = copy_out(inst.to_json().dump(2));
    });
}

sosgap_status sosgap_config_from_json(const char * text, sosgap_config ** out)
{
    return guarded([&] {
        require(text, "config text");
        require(out, "output");
        auto j = json::parse(text, nullptr, false);
        if (j.is_discarded())
            throw sosgap::ConfigError("config is not valid JSON");
        auto c = std::make_unique<sosgap_config>();
        c->config = sosgap::PipelineConfig::from_json(j);
        *out = c.release();
    });
}

sosgap_status sosgap_config_to_json(const sosgap_config * config, char ** out_json)
{
    return guarded([&] {
        require(config, "config");
        require(out_json, "output");
        *out_json = copy_out(config->config.to_json().dump(2));
    });
}

void sosgap_config_destroy(sosgap_config * config)
{
    delete config;
}

sosgap_status sosgap_run(const sosgap_config * config, sosgap_report ** out)
{
    return guarded([&] {
        require(config, "config");
        require(out, "output");
        *out = std::make_unique<sosgap_report>(sosgap::run_pipeline(config->config)).release();
    });
}

int sosgap_report_exit_code(const sosgap_report * report)
{
    return report ? report->report.exit_code : 2;
}

size_t sosgap_report_seed_count(const sosgap_report * report)
{
    return report ? report->report.seeds.size() : 0;
}

const char * sosgap_report_seed_status(const sosgap_report * report, size_t index)
{
    if (! report || index >= report->report.seeds.size())
        return nullptr;
    return sosgap::outcome_name(report->report.seeds[index].status);
}

sosgap_status sosgap_report_json(const sosgap_report * report, int indent, char ** out_json)
{
    return guarded([&] {
        require(report, "report");
        require(out_json, "output");
        *out_json = copy_out(report->report.to_json().dump(indent));
    });
}

void sosgap_report_destroy(sosgap_report * report)
{
    delete report;
}

sosgap_status sosgap_sweep_csv(const sosgap_config * config, char ** out_csv)
{
    return guarded([&] {
        require(config, "config");
        require(out_csv, "output");
        *out_csv = copy_out(sosgap::sweep_csv(sosgap::sweep(config->config), config->config.timings));
    });
}

int sosgap_worker_count(void)
{
    return sosgap::worker_count();
}

} // extern "C"
