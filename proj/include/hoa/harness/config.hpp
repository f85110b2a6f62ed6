#pragma once

// INI experiment configuration with "section.key=value" overrides.

#include "hoa/accel.hpp"
#include "hoa/flow.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace hoa::harness {

class Config {
public:
    Config() = default;

    static Config parse(const std::string& text)
    {
        Config c;
        std::istringstream in(text);
        try {
            boost::property_tree::ini_parser::read_ini(in, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw InvalidArgument(std::string("config: ") + e.what());
        }
        return c;
    }

    static Config load(const std::filesystem::path& path)
    {
        Config c;
        try {
            boost::property_tree::ini_parser::read_ini(path.string(), c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw InvalidArgument(std::string("config: ") + e.what());
        }
        return c;
    }

    /// Applies "section.key=value".
    void apply_override(const std::string& assignment)
    {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq)
            throw InvalidArgument("override '" + assignment + "' is not of the form section.key=value");
        set(assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1), assignment.substr(eq + 1));
    }

    void set(const std::string& section, const std::string& key, const std::string& value)
    {
        auto& sec = section_node(section);
        sec.put(boost::property_tree::ptree::path_type(key, '\0'), value);
    }

    bool has(const std::string& section, const std::string& key) const { return raw(section, key) != nullptr; }
    bool has_section(const std::string& section) const { return tree_.find(section) != tree_.not_found(); }

    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const
    {
        const std::string* v = raw(section, key);
        return v ? trim(*v) : fallback;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const
    {
        const std::string* v = raw(section, key);
        return v ? to_double(section + "." + key, trim(*v)) : fallback;
    }

    long get_int(const std::string& section, const std::string& key, long fallback) const
    {
        const std::string* v = raw(section, key);
        if (!v) return fallback;
        const std::string s = trim(*v);
        std::size_t used = 0;
        long out = 0;
        try {
            out = std::stol(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw InvalidArgument("config: " + section + "." + key + " = '" + s + "' is not an integer");
        return out;
    }

    std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                      const std::vector<std::string>& fallback) const
    {
        const std::string* v = raw(section, key);
        if (!v) return fallback;
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(*v);
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    std::vector<std::string> keys(const std::string& section) const
    {
        std::vector<std::string> out;
        auto it = tree_.find(section);
        if (it == tree_.not_found()) return out;
        for (const auto& kv : it->second) out.push_back(kv.first);
        return out;
    }

    std::vector<std::string> sections() const
    {
        std::vector<std::string> out;
        for (const auto& kv : tree_) out.push_back(kv.first);
        return out;
    }

    /// Rejects keys of `section` that are not listed in `allowed`.
    void require_known(const std::string& section, const std::set<std::string>& allowed) const
    {
        for (const auto& k : keys(section))
            if (!allowed.count(k)) throw InvalidArgument("config: unknown key '" + k + "' in section [" + section + "]");
    }

    static double to_double(const std::string& what, const std::string& s)
    {
        std::size_t used = 0;
        double out = 0.0;
        try {
            out = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw InvalidArgument("config: " + what + " = '" + s + "' is not a number");
        return out;
    }

private:
    boost::property_tree::ptree tree_;

    static std::string trim(const std::string& s)
    {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    const std::string* raw(const std::string& section, const std::string& key) const
    {
        auto it = tree_.find(section);
        if (it == tree_.not_found()) return nullptr;
        auto kt = it->second.find(key);
        if (kt == it->second.not_found()) return nullptr;
        return &kt->second.data();
    }

    boost::property_tree::ptree& section_node(const std::string& section)
    {
        auto it = tree_.find(section);
        if (it != tree_.not_found()) return it->second;
        return tree_.push_back({section, boost::property_tree::ptree()})->second;
    }
};

struct ProblemSpec {
    std::string name = "quadratic";
    std::map<std::string, double> params;
    std::uint64_t seed = 0;
    std::string init = "zeros"; ///< zeros | random
    double init_scale = 1.0;
};

struct RateOptions {
    double drop_fraction = 0.2;
    int min_points = 10;
};

struct ExperimentConfig {
    ProblemSpec problem;
    Algorithm algorithm = Algorithm::tensor1;
    SolverConfig solver;
    RateOptions rates;
    std::filesystem::path out_dir = "results";
    std::string name; ///< file stem; empty picks <problem>_p<p>_<algorithm>

    std::string stem() const
    {
        return name.empty() ? problem.name + "_p" + std::to_string(solver.p) + "_" + to_string(algorithm) : name;
    }
};

struct FlowExperimentConfig {
    ProblemSpec problem;
    FlowConfig flow;
    RateOptions rates;
    std::string v0 = "default"; ///< default | x0
    std::filesystem::path out_dir = "results";
    std::string name;

    std::string stem() const
    {
        return name.empty() ? "flow_" + problem.name + "_p" + std::to_string(flow.p) : name;
    }
};

struct SuiteConfig {
    ExperimentConfig base;
    Config source; ///< for per-problem sections
    std::vector<std::string> problems{"quadratic", "lse", "logistic"};
    std::vector<Algorithm> algorithms{Algorithm::caf1, Algorithm::caf2, Algorithm::tensor1, Algorithm::tensor2};
    std::vector<int> orders{1, 2};
    int jobs = 1;
};

namespace detail {

inline const std::set<std::string>& problem_keys()
{
    static const std::set<std::string> k{"name", "seed", "init", "init_scale"};
    return k;
}

inline void read_problem_params(const Config& c, const std::string& section, ProblemSpec& spec)
{
    for (const auto& key : c.keys(section)) {
        if (problem_keys().count(key)) continue;
        spec.params[key] = c.get_double(section, key, 0.0);
    }
}

inline ProblemSpec read_problem(const Config& c)
{
    ProblemSpec spec;
    spec.name = c.get_string("problem", "name", spec.name);
    spec.seed = static_cast<std::uint64_t>(c.get_int("problem", "seed", 0));
    spec.init = c.get_string("problem", "init", spec.init);
    if (spec.init != "zeros" && spec.init != "random")
        throw InvalidArgument("config: problem.init must be 'zeros' or 'random'");
    spec.init_scale = c.get_double("problem", "init_scale", spec.init_scale);
    read_problem_params(c, "problem", spec);
    return spec;
}

inline RateOptions read_rates(const Config& c)
{
    c.require_known("rates", {"drop_fraction", "min_points"});
    RateOptions r;
    r.drop_fraction = c.get_double("rates", "drop_fraction", r.drop_fraction);
    r.min_points = static_cast<int>(c.get_int("rates", "min_points", r.min_points));
    if (!(r.drop_fraction >= 0.0 && r.drop_fraction < 1.0)) throw InvalidArgument("config: rates.drop_fraction must lie in [0, 1)");
    if (r.min_points < 2) throw InvalidArgument("config: rates.min_points must be >= 2");
    return r;
}

inline void read_output(const Config& c, std::filesystem::path& dir, std::string& name)
{
    c.require_known("output", {"dir", "name"});
    dir = c.get_string("output", "dir", dir.string());
    name = c.get_string("output", "name", name);
}

} // namespace detail

inline ExperimentConfig read_experiment(const Config& c)
{
    c.require_known("algorithm", {"name", "p", "branch"});
    c.require_known("parameters", {"ell", "sigma_hat", "sigma_low", "sigma_up", "theta", "window_ratio", "sigma"});
    c.require_known("tolerances",
                    {"tol_grad", "max_iter", "sub_tol", "sub_max_iter", "max_doublings", "max_probes"});

    ExperimentConfig e;
    e.problem = detail::read_problem(c);
    e.algorithm = parse_algorithm(c.get_string("algorithm", "name", to_string(e.algorithm)));
    SolverConfig& s = e.solver;
    s.p = static_cast<int>(c.get_int("algorithm", "p", s.p));
    s.branch = parse_branch(c.get_string("algorithm", "branch", to_string(s.branch)));
    s.ell = c.get_double("parameters", "ell", s.ell);
    s.sigma_hat = c.get_double("parameters", "sigma_hat", s.sigma_hat);
    s.sigma_low = c.get_double("parameters", "sigma_low", s.sigma_low);
    s.sigma_up = c.get_double("parameters", "sigma_up", s.sigma_up);
    s.theta = c.get_double("parameters", "theta", s.theta);
    s.window_ratio = c.get_double("parameters", "window_ratio", s.window_ratio);
    s.sigma = c.get_double("parameters", "sigma", s.sigma);
    s.tol_grad = c.get_double("tolerances", "tol_grad", s.tol_grad);
    s.max_iter = static_cast<int>(c.get_int("tolerances", "max_iter", s.max_iter));
    s.sub_tol = c.get_double("tolerances", "sub_tol", s.sub_tol);
    s.sub_max_iter = static_cast<int>(c.get_int("tolerances", "sub_max_iter", s.sub_max_iter));
    s.bisect.max_doublings = static_cast<int>(c.get_int("tolerances", "max_doublings", s.bisect.max_doublings));
    s.bisect.max_probes = static_cast<int>(c.get_int("tolerances", "max_probes", s.bisect.max_probes));
    e.rates = detail::read_rates(c);
    detail::read_output(c, e.out_dir, e.name);
    return e;
}

inline FlowExperimentConfig read_flow_experiment(const Config& c)
{
    c.require_known("flow", {"p", "theta", "c", "t_end", "abs_tol", "rel_tol", "sample_stride", "grad_floor", "v0"});
    FlowExperimentConfig e;
    e.problem = detail::read_problem(c);
    FlowConfig& f = e.flow;
    f.p = static_cast<int>(c.get_int("flow", "p", f.p));
    f.theta = c.get_double("flow", "theta", f.theta);
    f.c = c.get_double("flow", "c", f.c);
    f.t_end = c.get_double("flow", "t_end", f.t_end);
    f.abs_tol = c.get_double("flow", "abs_tol", f.abs_tol);
    f.rel_tol = c.get_double("flow", "rel_tol", f.rel_tol);
    f.sample_stride = c.get_double("flow", "sample_stride", f.sample_stride);
    f.grad_floor = c.get_double("flow", "grad_floor", f.grad_floor);
    e.v0 = c.get_string("flow", "v0", e.v0);
    if (e.v0 != "default" && e.v0 != "x0") throw InvalidArgument("config: flow.v0 must be 'default' or 'x0'");
    f.validate();
    e.rates = detail::read_rates(c);
    detail::read_output(c, e.out_dir, e.name);
    return e;
}

inline SuiteConfig read_suite(const Config& c)
{
    c.require_known("suite", {"problems", "algorithms", "orders", "jobs"});
    SuiteConfig s;
    s.base = read_experiment(c);
    s.source = c;
    s.problems = c.get_list("suite", "problems", s.problems);
    const std::vector<std::string> algs = c.get_list("suite", "algorithms", {"caf1", "caf2", "tensor1", "tensor2"});
    s.algorithms.clear();
    for (const auto& a : algs) s.algorithms.push_back(parse_algorithm(a));
    const std::vector<std::string> orders = c.get_list("suite", "orders", {"1", "2"});
    s.orders.clear();
    for (const auto& o : orders) s.orders.push_back(static_cast<int>(Config::to_double("suite.orders", o)));
    s.jobs = static_cast<int>(c.get_int("suite", "jobs", 1));
    if (s.problems.empty() || s.algorithms.empty() || s.orders.empty())
        throw InvalidArgument("config: suite needs at least one problem, algorithm and order");
    if (s.jobs < 1) throw InvalidArgument("config: suite.jobs must be >= 1");
    return s;
}

/// Experiment for one cell of the suite matrix. Parameters in a section named
/// after the problem override the [problem] section.
inline ExperimentConfig suite_cell(const SuiteConfig& s, const std::string& problem, Algorithm algorithm, int p)
{
    ExperimentConfig e = s.base;
    e.problem.params.clear();
    e.problem.name = problem;
    if (s.base.problem.name == problem) e.problem.params = s.base.problem.params;
    detail::read_problem_params(s.source, problem, e.problem);
    e.algorithm = algorithm;
    e.solver.p = p;
    e.name.clear();
    return e;
}

} // namespace hoa::harness
