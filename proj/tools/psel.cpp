// psel: fit candidate models, rank them under information criteria, and
// inspect the fit/complexity Pareto frontier.

#include <psel/psel.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace psel;

struct RunConfig {
    std::string data_path;
    std::string response;
    std::string models_path;
    std::string fixture_path;
    bool enumerate = false;
    std::string family = "poisson";
    std::vector<std::string> criteria;
    std::optional<double> c_hat;
    std::optional<double> w1;
    std::optional<double> w2;
    double gamma = 0.0;
    std::string output;
    bool no_standardize = false;
    bool no_constant = false;
    std::optional<std::size_t> sample_size;
    std::size_t obs_per_param = 15;
    std::string highlight;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    // path
    std::string penalty = "ridge";
    std::string grid;
    std::string formula;
    // simulate
    std::size_t sim_n = 49;

    bool standardize() const { return !no_standardize; }
    bool include_constant() const { return !no_constant; }
};

/// Either fitted models (data mode) or precomputed points (fixture mode).
struct Candidates {
    std::vector<FittedModel> fits;
    std::vector<ObjectivePoint> points;
    bool from_fixture = false;
    std::size_t n = 0;
    std::optional<double> c_hat;
};

class OutputSink {
public:
    explicit OutputSink(const std::string& path)
    {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw DataError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    bool to_file() const { return file_.is_open(); }

private:
    std::ofstream file_;
};

std::vector<ModelSpec> candidate_specs(const RunConfig& cfg, const Dataset& data)
{
    if (cfg.enumerate == !cfg.models_path.empty())
        throw UsageError("give exactly one of --models or --enumerate");
    if (cfg.enumerate) return enumerate_hierarchical_models(data.covariate_names());
    auto specs = load_model_list(cfg.models_path, data.covariate_names());
    if (specs.empty()) throw UsageError("model list '" + cfg.models_path + "' is empty");
    return specs;
}

/// Fits every spec; models are independent so they are spread over threads,
/// and results keep the list order.
std::vector<FittedModel> fit_all(const Dataset& data, const std::vector<ModelSpec>& specs, Family family,
                                 bool standardize, unsigned threads)
{
    std::vector<FittedModel> fits(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (auto i = next++; i < specs.size(); i = next++) {
            try {
                fits[i] = fit_model(data, specs[i], family, standardize);
            } catch (const NumericalError& e) {
                fits[i].spec = specs[i];
                fits[i].family = family;
                fits[i].p = specs[i].parameter_count();
                fits[i].n = data.n();
                fits[i].neg_log_lik = std::numeric_limits<double>::quiet_NaN();
                fits[i].rss = std::numeric_limits<double>::quiet_NaN();
                fits[i].pearson_chi_sq = std::numeric_limits<double>::quiet_NaN();
                fits[i].converged = false;
                errors[i] = std::current_exception();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned count = std::min<unsigned>(threads ? threads : hw, static_cast<unsigned>(specs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const NumericalError& e) {
            std::cerr << "warning: model '" << specs[i].label() << "' failed: " << e.what() << '\n';
        }
    }
    for (const auto& f : fits) {
        if (!f.converged && f.iterations > 0)
            std::cerr << "warning: model '" << f.spec.label() << "' did not converge in "
                      << f.iterations << " iterations\n";
    }
    if (std::none_of(fits.begin(), fits.end(), [](const FittedModel& f) { return f.converged; }))
        throw NumericalError("no candidate model could be fit");
    return fits;
}

Candidates load_candidates(const RunConfig& cfg)
{
    Candidates c;
    const bool data_mode = !cfg.data_path.empty();
    if (data_mode == !cfg.fixture_path.empty())
        throw UsageError("give either --fixture or --data (with --models or --enumerate)");
    if (!data_mode) {
        auto table = read_objective_table(cfg.fixture_path);
        if (table.points.empty()) throw DataError(cfg.fixture_path + ": no usable rows");
        c.points = std::move(table.points);
        c.from_fixture = true;
        c.n = cfg.sample_size.value_or(table.n.value_or(0));
        c.c_hat = cfg.c_hat ? cfg.c_hat : table.c_hat;
        return c;
    }
    if (cfg.response.empty()) throw UsageError("--response is required with --data");
    const auto data = load_dataset(cfg.data_path, cfg.response);
    const auto specs = candidate_specs(cfg, data);
    c.fits = fit_all(data, specs, parse_family(cfg.family), cfg.standardize(), cfg.threads);
    c.points = objective_points(c.fits, cfg.include_constant());
    c.n = data.n();
    c.c_hat = cfg.c_hat;
    if (!c.c_hat && parse_family(cfg.family) == Family::poisson) c.c_hat = estimate_c_hat(c.fits);
    return c;
}

CriterionSpec make_criterion(const std::string& name, const RunConfig& cfg, const Candidates& c)
{
    CriterionSpec crit;
    crit.name = parse_criterion(name);
    crit.c_hat = c.c_hat;
    crit.w1 = cfg.w1;
    crit.w2 = cfg.w2;
    crit.gamma = cfg.gamma;
    if (c.from_fixture) {
        if (crit.name == Criterion::ridge || crit.name == Criterion::lasso ||
            (crit.name == Criterion::custom && cfg.gamma != 0.0))
            throw UsageError(crit.label() +
                             " needs fitted coefficients; precomputed (f1, f2) rows only support gamma = 0");
    }
    return crit;
}

RankedTable rank(const Candidates& c, const CriterionSpec& crit, const RunConfig& cfg)
{
    if (c.from_fixture) return rank_models(c.points, crit, c.n);
    return rank_models(c.fits, crit, cfg.include_constant());
}

void print_ranked(std::ostream& out, const RankedTable& table, const CriterionSpec& crit)
{
    out << "criterion: " << crit.label() << '\n';
    out << "top model: " << table.front().label << " (p = " << table.front().p << ")\n\n";
    out << std::left << std::setw(5) << "rank" << std::right << std::setw(10) << crit.label()
        << std::setw(10) << "delta" << std::setw(10) << "f1" << std::setw(8) << "f2" << "  model\n";
    for (const auto& r : table) {
        out << std::left << std::setw(5) << r.rank << std::right << std::setw(10) << format_fixed(r.score)
            << std::setw(10) << format_fixed(r.delta) << std::setw(10) << format_fixed(r.f1)
            << std::setw(8) << format_fixed(r.f2) << "  " << r.label << '\n';
    }
}

int cmd_fit(const RunConfig& cfg)
{
    if (!cfg.fixture_path.empty()) throw UsageError("fit reads --data, not --fixture");
    auto c = load_candidates(cfg);
    OutputSink sink(cfg.output);
    write_fit_results(sink.stream(), c.fits, cfg.include_constant());
    const auto converged = std::count_if(c.fits.begin(), c.fits.end(), [](const auto& f) { return f.converged; });
    std::cerr << "fitted " << c.fits.size() << " models (" << converged << " converged)\n";
    return 0;
}

int cmd_rank(const RunConfig& cfg)
{
    if (cfg.criteria.size() != 1) throw UsageError("rank takes exactly one --criterion");
    const auto c = load_candidates(cfg);
    const auto crit = make_criterion(cfg.criteria.front(), cfg, c);
    const auto table = rank(c, crit, cfg);
    print_ranked(std::cout, table, crit);
    if (!cfg.output.empty()) {
        OutputSink sink(cfg.output);
        write_ranked_csv(sink.stream(), table);
    }
    return 0;
}

std::optional<std::string> highlight_id(const RunConfig& cfg, const Candidates& c)
{
    if (cfg.highlight.empty()) return std::nullopt;
    const auto crit = make_criterion(cfg.highlight, cfg, c);
    return rank(c, crit, cfg).front().label;
}

int cmd_frontier(const RunConfig& cfg)
{
    const auto c = load_candidates(cfg);
    const auto report = pareto_frontier(c.points);
    auto j = frontier_to_json(report);
    std::ostream& log = cfg.output.empty() ? std::cerr : std::cout;
    log << "frontier: " << report.frontier.size() << " Pareto optimal, " << report.dominated_count
        << " dominated of " << report.all_points.size() << '\n';
    for (const auto& p : report.frontier)
        log << "  p = " << p.p << "  f1 = " << format_fixed(p.f1) << "  " << p.model_id << '\n';
    if (report.elbow) log << "elbow: " << report.elbow->point.model_id << '\n';

    if (c.n > 0) {
        const auto p_max = max_parameters_for(c.n, cfg.obs_per_param);
        j["constraint"] = {{"n", c.n}, {"obs_per_param", cfg.obs_per_param}, {"p_max", p_max}};
        if (p_max >= 1) {
            try {
                const auto chosen = constrained_select(report.frontier, p_max);
                j["constraint"]["selected_id"] = chosen.model_id;
                log << "constrained (p <= " << p_max << "): " << chosen.model_id << '\n';
            } catch (const UsageError&) {
                j["constraint"]["selected_id"] = nullptr;
            }
        }
    }
    if (const auto id = highlight_id(cfg, c)) {
        j["highlight"] = {{"criterion", make_criterion(cfg.highlight, cfg, c).label()},
                          {"id", *id},
                          {"on_frontier", report.on_frontier(*id)}};
    }
    OutputSink sink(cfg.output);
    sink.stream() << j.dump(2) << '\n';
    return 0;
}

int cmd_plot(const RunConfig& cfg)
{
    const auto c = load_candidates(cfg);
    const auto report = pareto_frontier(c.points);
    PlotOptions opt;
    opt.highlight_id = highlight_id(cfg, c);
    if (opt.highlight_id) opt.highlight_label = "top model (" + make_criterion(cfg.highlight, cfg, c).label() + ")";
    OutputSink sink(cfg.output);
    sink.stream() << render_frontier_svg(report, opt);
    return 0;
}

int cmd_sensitivity(const RunConfig& cfg)
{
    if (cfg.criteria.size() < 2) throw UsageError("sensitivity needs at least two --criterion values");
    const auto c = load_candidates(cfg);
    std::vector<CriterionSpec> crits;
    for (const auto& name : cfg.criteria) crits.push_back(make_criterion(name, cfg, c));
    const auto report = c.from_fixture ? sensitivity_report(c.points, crits, c.n)
                                       : sensitivity_report(c.fits, crits, cfg.include_constant());
    for (const auto& e : report.entries) {
        std::cout << std::left << std::setw(8) << e.criterion << std::right << std::setw(10)
                  << format_fixed(e.score) << "  p = " << e.top_p << "  " << e.top_model << '\n';
    }
    std::cout << "agreement: " << (report.agreement ? "true" : "false") << '\n';
    if (!cfg.output.empty()) {
        OutputSink sink(cfg.output);
        write_sensitivity_csv(sink.stream(), report);
    }
    return 0;
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = detail::parse_number(item);
        if (!v) throw UsageError("invalid grid value '" + item + "'");
        grid.push_back(*v);
    }
    if (grid.empty()) throw UsageError("--grid is empty");
    return grid;
}

int cmd_path(const RunConfig& cfg)
{
    if (cfg.data_path.empty() || cfg.response.empty()) throw UsageError("path needs --data and --response");
    double gamma = 0.0;
    if (cfg.penalty == "ridge") gamma = 2.0;
    else if (cfg.penalty == "lasso") gamma = 1.0;
    else throw UsageError("--penalty must be ridge or lasso");
    const auto grid = parse_grid(cfg.grid);
    const auto data = load_dataset(cfg.data_path, cfg.response);
    ModelSpec spec;
    if (cfg.formula.empty()) {
        std::vector<Term> terms;
        for (const auto& name : data.covariate_names()) terms.push_back({name, 1});
        spec = ModelSpec(std::move(terms));
    } else {
        spec = parse_model_formula(cfg.formula, data.covariate_names());
    }
    const auto design = build_design_matrix(data, spec, cfg.standardize());
    const auto path = regularization_path(design, data.response_vector(), gamma, grid);
    OutputSink sink(cfg.output);
    write_path_csv(sink.stream(), path, design.column_names());
    return 0;
}

/// Synthetic richness-style data: three covariates and a Poisson response.
int cmd_simulate(const RunConfig& cfg)
{
    if (cfg.sim_n < 2) throw UsageError("--n must be at least 2");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    OutputSink sink(cfg.output);
    auto& out = sink.stream();
    out << "site,richness,area,temp,precip\n";
    for (std::size_t i = 0; i < cfg.sim_n; ++i) {
        const double area = std::exp(11.0 + 0.8 * z(rng));
        const double temp = 12.0 + 4.0 * z(rng);
        const double precip = 90.0 + 30.0 * z(rng);
        const double za = (std::log(area) - 11.0) / 0.8;
        const double zt = (temp - 12.0) / 4.0;
        const double zp = (precip - 90.0) / 30.0;
        const double eta = 5.3 + 0.12 * za + 0.08 * zt - 0.04 * zt * zt + 0.05 * zp - 0.03 * zp * zp;
        std::poisson_distribution<long> pois(std::exp(eta));
        out << "s" << (i + 1) << ',' << pois(rng) << ',' << format_full(area) << ',' << format_full(temp)
            << ',' << format_full(precip) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    RunConfig cfg;
    CLI::App app{"psel: model selection as fit-vs-complexity multi-objective optimization"};
    app.require_subcommand(1);

    const auto add_source = [&](CLI::App* cmd) {
        cmd->add_option("--data", cfg.data_path, "observation CSV (header row)");
        cmd->add_option("--response", cfg.response, "response column name");
        cmd->add_option("--models", cfg.models_path, "model-list file, one formula per line");
        cmd->add_flag("--enumerate", cfg.enumerate, "use every hierarchical linear/quadratic model");
        cmd->add_option("--family", cfg.family, "poisson or gaussian")->capture_default_str();
        cmd->add_flag("--no-standardize", cfg.no_standardize, "do not center and scale covariates");
        cmd->add_flag("--no-constant", cfg.no_constant, "drop the model-independent likelihood constant");
        cmd->add_option("--threads", cfg.threads, "fitting threads (0 = hardware)");
        cmd->add_option("--seed", cfg.seed, "seed for any randomized step");
    };
    const auto add_points = [&](CLI::App* cmd) {
        add_source(cmd);
        cmd->add_option("--fixture", cfg.fixture_path, "precomputed CSV with label,f1,f2 columns");
        cmd->add_option("--sample-size", cfg.sample_size, "sample size n for AICc/BIC in fixture mode");
        cmd->add_option("--c-hat", cfg.c_hat, "overdispersion estimate for QAIC/QAICc");
        cmd->add_option("--w1", cfg.w1, "CUSTOM fit weight");
        cmd->add_option("--w2", cfg.w2, "complexity weight for RIDGE/LASSO/CUSTOM");
        cmd->add_option("--gamma", cfg.gamma, "CUSTOM penalty degree");
        cmd->add_option("--output,-o", cfg.output, "output file (default stdout)");
    };

    auto* fit = app.add_subcommand("fit", "fit candidate models and write per-model results CSV");
    add_source(fit);
    fit->add_option("--output,-o", cfg.output, "results CSV (default stdout)");

    auto* rank = app.add_subcommand("rank", "rank candidates under one criterion");
    add_points(rank);
    rank->add_option("--criterion", cfg.criteria, "aic, aicc, qaic, qaicc, bic, ridge, lasso, custom")
        ->required()
        ->delimiter(',');

    auto* frontier = app.add_subcommand("frontier", "extract the Pareto frontier as JSON");
    add_points(frontier);
    frontier->add_option("--obs-per-param", cfg.obs_per_param, "constraint p < n / k")->capture_default_str();
    frontier->add_option("--highlight", cfg.highlight, "criterion whose top model is reported");

    auto* plot = app.add_subcommand("plot", "SVG scatter of f1 against f2 with the frontier");
    add_points(plot);
    plot->add_option("--highlight", cfg.highlight, "criterion whose top model is ringed");

    auto* sens = app.add_subcommand("sensitivity", "compare top models across criteria");
    add_points(sens);
    sens->add_option("--criterion", cfg.criteria, "two or more criteria")->required()->delimiter(',');

    auto* path = app.add_subcommand("path", "ridge or lasso regularization path CSV");
    path->add_option("--data", cfg.data_path, "observation CSV")->required();
    path->add_option("--response", cfg.response, "response column name")->required();
    path->add_option("--formula", cfg.formula, "model formula (default: every covariate, linear)");
    path->add_option("--penalty", cfg.penalty, "ridge or lasso")->capture_default_str();
    path->add_option("--grid", cfg.grid, "ascending comma-separated w2 values")->required();
    path->add_flag("--no-standardize", cfg.no_standardize, "do not center and scale covariates");
    path->add_option("--output,-o", cfg.output, "output CSV (default stdout)");

    auto* sim = app.add_subcommand("simulate", "write a seeded synthetic count dataset");
    sim->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sim->add_option("--n", cfg.sim_n, "number of rows")->capture_default_str();
    sim->add_option("--output,-o", cfg.output, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (fit->parsed()) return cmd_fit(cfg);
        if (rank->parsed()) return cmd_rank(cfg);
        if (frontier->parsed()) return cmd_frontier(cfg);
        if (plot->parsed()) return cmd_plot(cfg);
        if (sens->parsed()) return cmd_sensitivity(cfg);
        if (path->parsed()) return cmd_path(cfg);
        if (sim->parsed()) return cmd_simulate(cfg);
    } catch (const psel::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const psel::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
