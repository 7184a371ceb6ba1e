// Command-line front end: moment computation, fluctuation covariances,
// hypothesis tests, estimation, order selection, Monte Carlo simulation,
// and reference-table reproduction.
//
// Exit codes: 0 accept/success, 1 reject, 2 usage/config error,
// 3 numeric failure.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eigeninfer/inference.hpp"
#include "eigeninfer/mc.hpp"
#include "eigeninfer/report.hpp"

namespace ei = eigeninfer;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// --model a1:t1,a2:t2,...
ei::PopulationModel parse_model(const std::string& spec) {
    std::vector<ei::SpectrumBlock> blocks;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw UsageError("--model blocks must look like a:t");
        try {
            blocks.push_back({std::stod(tok.substr(0, colon)),
                              std::stod(tok.substr(colon + 1))});
        } catch (const std::exception&) {
            throw UsageError("--model contains a non-numeric value");
        }
    }
    if (blocks.empty()) throw UsageError("--model is empty");
    try {
        return ei::PopulationModel(std::move(blocks));
    } catch (const std::exception& e) {
        throw UsageError(std::string("--model invalid: ") + e.what());
    }
}

// --spike a[,count]
std::pair<double, int> parse_spike(const std::string& spec) {
    std::stringstream ss(spec);
    std::string tok;
    std::vector<std::string> parts;
    while (std::getline(ss, tok, ',')) parts.push_back(tok);
    if (parts.empty() || parts.size() > 2) throw UsageError("--spike expects a[,count]");
    try {
        const double a = std::stod(parts[0]);
        const int count = parts.size() == 2 ? std::stoi(parts[1]) : 1;
        return {a, count};
    } catch (const std::exception&) {
        throw UsageError("--spike contains a non-numeric value");
    }
}

std::complex<double> parse_complex_token(std::string tok) {
    tok.erase(std::remove_if(tok.begin(), tok.end(),
                             [](unsigned char ch) { return std::isspace(ch); }),
              tok.end());
    if (tok.empty()) throw UsageError("empty matrix cell");
    if (tok.back() == 'i' || tok.back() == 'I') {
        tok.pop_back();
        // split re and im at the last +/- that is not an exponent sign
        std::size_t split = std::string::npos;
        for (std::size_t k = tok.size(); k-- > 1;) {
            if ((tok[k] == '+' || tok[k] == '-') &&
                tok[k - 1] != 'e' && tok[k - 1] != 'E') {
                split = k;
                break;
            }
        }
        try {
            if (split == std::string::npos) return {0.0, std::stod(tok)};
            const double re = std::stod(tok.substr(0, split));
            const double im = std::stod(tok.substr(split));
            return {re, im};
        } catch (const std::exception&) {
            throw UsageError("malformed complex cell: " + tok);
        }
    }
    try {
        return {std::stod(tok), 0.0};
    } catch (const std::exception&) {
        throw UsageError("malformed matrix cell: " + tok);
    }
}

std::string format_complex_token(std::complex<double> z) {
    if (z.imag() == 0.0) return fmt17(z.real());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g%+.17gi", z.real(), z.imag());
    return buf;
}

// CSV matrix, columns = samples; cells real or "re+imi" tokens.
Eigen::MatrixXcd read_data_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open input file: " + path);
    std::vector<std::vector<std::complex<double>>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::complex<double>> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(parse_complex_token(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw UsageError("ragged rows in input file");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw UsageError("empty input file: " + path);
    Eigen::MatrixXcd X(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return X;
}

std::vector<double> read_stats_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open stats file: " + path);
    std::vector<double> vals;
    std::string cell;
    while (std::getline(in, cell, ',')) {
        std::stringstream inner(cell);
        std::string tok;
        while (inner >> tok) {
            try {
                vals.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw UsageError("malformed stats value: " + tok);
            }
        }
    }
    if (vals.empty()) throw UsageError("stats file holds no values: " + path);
    return vals;
}

struct Options {
    std::string model_spec;
    std::string spike_spec;
    int p = 0;
    int n = 0;
    int beta = 2;
    int q = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    std::string format = "json";
    std::string out_path;
    std::string input_path;
    std::string stats_path;
    std::string fix_a;
    std::string fix_t;
    int k_max = 3;
    int table = 0;
    bool raw = false;
    bool haar = false;

    json resolved(const std::string& command) const {
        json j;
        j["command"] = command;
        if (!model_spec.empty()) j["model"] = model_spec;
        if (!spike_spec.empty()) j["spike"] = spike_spec;
        j["p"] = p;
        j["n"] = n;
        j["beta"] = beta;
        j["q"] = q;
        j["trials"] = trials;
        j["seed"] = seed;
        j["format"] = format;
        if (!out_path.empty()) j["out"] = out_path;
        if (!input_path.empty()) j["input"] = input_path;
        if (!stats_path.empty()) j["stats"] = stats_path;
        return j;
    }
};

std::ostream& open_sink(const Options& opt, std::ofstream& file) {
    if (opt.out_path.empty()) return std::cout;
    file.open(opt.out_path);
    if (!file) throw UsageError("cannot open output file: " + opt.out_path);
    return file;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw UsageError(msg);
}

std::vector<int> parse_index_list(const std::string& spec, int k, const char* what) {
    std::vector<int> idx;
    if (spec.empty()) return idx;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int v = 0;
        try {
            v = std::stoi(tok);
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + " expects 1-based comma-separated indices");
        }
        if (v < 1 || v > k)
            throw UsageError(std::string(what) + " index out of range");
        idx.push_back(v);
    }
    return idx;
}

ei::ThetaVector make_template(const ei::PopulationModel& model, const Options& opt) {
    const int k = static_cast<int>(model.block_count());
    ei::ThetaVector tpl;
    for (const auto& b : model.blocks()) {
        tpl.eigenvalues.push_back(b.eigenvalue);
        tpl.masses.push_back(b.mass);
    }
    tpl.eig_free.assign(static_cast<std::size_t>(k), true);
    tpl.mass_free.assign(static_cast<std::size_t>(k), true);
    tpl.mass_free.back() = false;
    for (int i : parse_index_list(opt.fix_a, k, "--fix-a"))
        tpl.eig_free[static_cast<std::size_t>(i) - 1] = false;
    for (int i : parse_index_list(opt.fix_t, k - 1, "--fix-t"))
        tpl.mass_free[static_cast<std::size_t>(i) - 1] = false;
    tpl.validate();
    return tpl;
}

ei::PopulationModel resolve_model(const Options& opt) {
    require(!opt.model_spec.empty() || !opt.spike_spec.empty(),
            "need --model or --spike");
    if (!opt.model_spec.empty()) return parse_model(opt.model_spec);
    const auto [a, count] = parse_spike(opt.spike_spec);
    require(opt.p >= 2, "--spike needs --p");
    const double t = static_cast<double>(count) / opt.p;
    if (a == 1.0) return ei::PopulationModel::identity();
    if (a > 1.0) return ei::PopulationModel({{a, t}, {1.0, 1.0 - t}});
    return ei::PopulationModel({{1.0, 1.0 - t}, {a, t}});
}

ei::TraceStats stats_from_inputs(const Options& opt, int q_needed) {
    require(opt.p >= 1 && opt.n >= 1, "need --p and --n");
    if (!opt.stats_path.empty()) {
        const std::vector<double> vals = read_stats_csv(opt.stats_path);
        require(static_cast<int>(vals.size()) >= q_needed,
                "stats file supplies fewer trace powers than q");
        ei::TraceStats st;
        st.p = opt.p;
        st.n = opt.n;
        st.beta = opt.beta;
        st.trace_powers = vals;
        return st;
    }
    if (!opt.input_path.empty()) {
        const Eigen::MatrixXcd X = read_data_csv(opt.input_path);
        require(static_cast<int>(X.rows()) == opt.p, "--p does not match input rows");
        require(static_cast<int>(X.cols()) == opt.n, "--n does not match input columns");
        return ei::trace_powers(ei::scm_from_data(X), q_needed, opt.n, opt.beta);
    }
    // fall back to one simulated draw from the model
    const ei::PopulationModel model = resolve_model(opt);
    ei::SampleSpec spec;
    spec.p = opt.p;
    spec.n = opt.n;
    spec.beta = opt.beta;
    spec.seed = opt.seed;
    spec.rotation = opt.haar ? ei::Rotation::haar : ei::Rotation::identity;
    return ei::sample_trace_stats(model, spec, q_needed);
}

// ---------------------------------------------------------------- moments

int cmd_moments(const Options& opt) {
    require(opt.q >= 1, "moments: need --q >= 1");
    require(opt.p >= 1 && opt.n >= 1, "moments: need --p and --n");
    const ei::PopulationModel model = resolve_model(opt);
    const double c = static_cast<double>(opt.p) / opt.n;
    const std::vector<double> as = ei::population_moments(model, opt.q);
    const ei::SampleMoments sm = ei::sample_moments(as, c, opt.q);

    std::ofstream file;
    std::ostream& os = open_sink(opt, file);
    if (opt.format == "csv") {
        os << "order,alpha_sigma,alpha_s,alpha_stilde\n";
        for (int j = 1; j <= opt.q; ++j)
            os << j << "," << fmt17(as[j - 1]) << "," << fmt17(sm.alpha_s[j - 1])
               << "," << fmt17(sm.alpha_stilde[j - 1]) << "\n";
    } else {
        json j;
        j["kind"] = "moments";
        j["config"] = opt.resolved("moments");
        j["c"] = c;
        j["alpha_sigma"] = as;
        j["alpha_s"] = sm.alpha_s;
        j["alpha_stilde"] = sm.alpha_stilde;
        os << j.dump(2) << "\n";
    }
    return 0;
}

// -------------------------------------------------------------------- cov

int cmd_cov(const Options& opt) {
    require(opt.q >= 1, "cov: need --q >= 1");
    require(opt.p >= 1 && opt.n >= 1, "cov: need --p and --n");
    const ei::PopulationModel model = resolve_model(opt);
    const ei::FluctuationMatrix Q =
        ei::q_matrix(model, opt.p, opt.n, opt.q, opt.beta);

    std::ofstream file;
    std::ostream& os = open_sink(opt, file);
    if (opt.format == "csv") {
        for (int i = 0; i < opt.q; ++i) {
            for (int j = 0; j < opt.q; ++j)
                os << (j ? "," : "") << fmt17(Q.entries(i, j));
            os << "\n";
        }
    } else {
        json rows = json::array();
        for (int i = 0; i < opt.q; ++i) {
            json row = json::array();
            for (int j = 0; j < opt.q; ++j) row.push_back(Q.entries(i, j));
            rows.push_back(row);
        }
        json j;
        j["kind"] = "cov";
        j["config"] = opt.resolved("cov");
        j["q_matrix"] = rows;
        j["positive_definite"] = Q.positive_definite();
        os << j.dump(2) << "\n";
    }
    return 0;
}

// ------------------------------------------------------------------- test

void emit_test_report(const Options& opt, const std::string& command,
                      const ei::TestReport& rep, const ei::ThetaVector* theta) {
    std::ofstream file;
    std::ostream& os = open_sink(opt, file);
    if (opt.format == "csv") {
        os << "kind,statistic,dof,p_value,threshold,decision\n"
           << rep.kind << "," << fmt17(rep.statistic) << "," << rep.dof << ","
           << fmt17(rep.p_value) << "," << fmt17(rep.threshold) << ","
           << (rep.reject ? "reject" : "accept") << "\n";
    } else {
        json j = ei::report_to_json(rep, theta);
        j["config"] = opt.resolved(command);
        os << j.dump(2) << "\n";
    }
}

int cmd_test(const Options& opt) {
    const bool sphericity = opt.model_spec.empty() && opt.spike_spec.empty();
    const int q = sphericity ? 2 : (opt.q >= 1 ? opt.q : 2);
    Options local = opt;
    if (sphericity) local.model_spec = "1:1";  // simulation fallback draws from I
    const ei::TraceStats st = stats_from_inputs(local, q);
    if (sphericity) {
        const ei::TestReport rep = ei::sphericity_test(st);
        emit_test_report(opt, "test", rep, nullptr);
        return rep.reject ? 1 : 0;
    }
    const ei::PopulationModel model = resolve_model(opt);
    ei::ThetaVector th;
    for (const auto& b : model.blocks()) {
        th.eigenvalues.push_back(b.eigenvalue);
        th.masses.push_back(b.mass);
    }
    th.eig_free.assign(th.eigenvalues.size(), false);
    th.mass_free.assign(th.masses.size(), false);
    const ei::TestReport rep = ei::test_statistic(th, st, q);
    emit_test_report(opt, "test", rep, &th);
    return rep.reject ? 1 : 0;
}

// --------------------------------------------------------------- estimate

int cmd_estimate(const Options& opt) {
    ei::EstimateOptions eopt;
    eopt.seed = opt.seed;
    ei::EstimateReport rep;
    if (!opt.spike_spec.empty() && opt.model_spec.empty()) {
        const auto [a, count] = parse_spike(opt.spike_spec);
        (void)a;
        const ei::TraceStats st = stats_from_inputs(opt, 2);
        rep = ei::spiked_estimate(st, 1.0, count, eopt);
    } else {
        const ei::PopulationModel model = resolve_model(opt);
        const ei::ThetaVector tpl = make_template(model, opt);
        const int q = opt.q >= 1 ? opt.q : tpl.free_dim() + 1;
        const ei::TraceStats st = stats_from_inputs(opt, std::max(q, 2));
        rep = ei::estimate(st, tpl, q, eopt);
    }
    std::ofstream file;
    std::ostream& os = open_sink(opt, file);
    if (opt.format == "csv") {
        os << "block,eigenvalue,mass\n";
        for (std::size_t i = 0; i < rep.theta_hat.masses.size(); ++i)
            os << (i + 1) << "," << fmt17(rep.theta_hat.eigenvalues[i]) << ","
               << fmt17(rep.theta_hat.masses[i]) << "\n";
    } else {
        json j = ei::report_to_json(rep);
        j["config"] = opt.resolved("estimate");
        os << j.dump(2) << "\n";
    }
    return 0;
}

// ------------------------------------------------------------------ order

int cmd_order(const Options& opt) {
    require(opt.p >= 1 && opt.n >= 1, "order: need --p and --n");
    Eigen::MatrixXcd X;
    if (!opt.input_path.empty()) {
        X = read_data_csv(opt.input_path);
        require(static_cast<int>(X.rows()) == opt.p, "--p does not match input rows");
        require(static_cast<int>(X.cols()) == opt.n, "--n does not match input columns");
    } else {
        const ei::PopulationModel model = resolve_model(opt);
        ei::SampleSpec spec;
        spec.p = opt.p;
        spec.n = opt.n;
        spec.beta = opt.beta;
        spec.seed = opt.seed;
        X = ei::sample_data(model, spec);
    }
    ei::EstimateOptions eopt;
    eopt.seed = opt.seed;
    // the order scan only needs the argmin over k; lighter optimizer
    // settings keep the selection intact at a fraction of the cost
    eopt.restarts = 2;
    eopt.nm.max_iter = 800;
    eopt.nm.x_tol = 1e-7;
    eopt.nm.f_tol = 1e-10;
    const ei::OrderSelection sel = ei::select_order(X, opt.n, opt.beta, opt.k_max, eopt);
    std::ofstream file;
    std::ostream& os = open_sink(opt, file);
    if (opt.format == "csv") {
        os << "k,criterion,selected\n";
        for (std::size_t i = 0; i < sel.criteria.size(); ++i)
            os << (i + 1) << "," << fmt17(sel.criteria[i]) << ","
               << (static_cast<int>(i + 1) == sel.k_hat ? 1 : 0) << "\n";
    } else {
        json j = ei::report_to_json(sel.estimate);
        j["kind"] = "order";
        j["config"] = opt.resolved("order");
        j["k_hat"] = sel.k_hat;
        j["criteria"] = sel.criteria;
        os << j.dump(2) << "\n";
    }
    return 0;
}

// --------------------------------------------------------------- simulate

int cmd_simulate(const Options& opt) {
    require(opt.p >= 1 && opt.n >= 1, "simulate: need --p and --n");
    const int q = opt.q >= 1 ? opt.q : 2;
    const ei::PopulationModel model = resolve_model(opt);
    std::ofstream file;
    std::ostream& os = open_sink(opt, file);
    if (opt.raw) {
        ei::SampleSpec spec;
        spec.p = opt.p;
        spec.n = opt.n;
        spec.beta = opt.beta;
        spec.seed = opt.seed;
        spec.rotation = opt.haar ? ei::Rotation::haar : ei::Rotation::identity;
        const Eigen::MatrixXcd X = ei::sample_data(model, spec);
        for (int i = 0; i < opt.p; ++i) {
            for (int j = 0; j < opt.n; ++j)
                os << (j ? "," : "") << format_complex_token(X(i, j));
            os << "\n";
        }
        return 0;
    }
    const int trials = opt.trials >= 1 ? opt.trials : 1;
    os << "trial,p,n,beta,seed";
    for (int j = 1; j <= q; ++j) os << ",tr_s" << j;
    os << "\n";
    const std::vector<ei::TraceStats> all = ei::run_trials<ei::TraceStats>(
        trials, [&](int t) {
            ei::SampleSpec spec;
            spec.p = opt.p;
            spec.n = opt.n;
            spec.beta = opt.beta;
            spec.seed = ei::detail::splitmix64(opt.seed) ^ static_cast<std::uint64_t>(t);
            spec.rotation = opt.haar ? ei::Rotation::haar : ei::Rotation::identity;
            return ei::sample_trace_stats(model, spec, q);
        });
    for (int t = 0; t < trials; ++t)
        os << ei::trace_stats_csv_row(t, opt.seed, all[static_cast<std::size_t>(t)])
           << "\n";
    return 0;
}

// -------------------------------------------------------------- reproduce

struct TrialSeeder {
    std::uint64_t base;
    std::uint64_t operator()(int trial) const {
        return ei::detail::splitmix64(base) ^ static_cast<std::uint64_t>(trial);
    }
};

struct BiasMse {
    double bias = 0.0;
    double mse = 0.0;
};

BiasMse bias_mse(const std::vector<double>& xs, double truth) {
    BiasMse out;
    for (double x : xs) {
        out.bias += x - truth;
        out.mse += (x - truth) * (x - truth);
    }
    out.bias /= static_cast<double>(xs.size());
    out.mse /= static_cast<double>(xs.size());
    return out;
}

ei::ThetaVector two_block_template() {
    // (a, t) free, a2 = 1 fixed; starting values at the truth scale
    ei::ThetaVector tpl;
    tpl.eigenvalues = {2.0, 1.0};
    tpl.masses = {0.5, 0.5};
    tpl.eig_free = {true, false};
    tpl.mass_free = {true, false};
    return tpl;
}

// One Monte Carlo pass of the two-block experiment; returns per-trial
// (a_hat, t_hat).
std::vector<std::pair<double, double>> run_two_block(int p, int n, int beta,
                                                     int trials,
                                                     std::uint64_t seed) {
    const ei::PopulationModel model({{2.0, 0.5}, {1.0, 0.5}});
    const TrialSeeder seeds{seed};
    return ei::run_trials<std::pair<double, double>>(trials, [&](int t) {
        ei::SampleSpec spec;
        spec.p = p;
        spec.n = n;
        spec.beta = beta;
        spec.seed = seeds(t);
        const ei::TraceStats st = ei::sample_trace_stats(model, spec, 4);
        ei::EstimateOptions eopt;
        eopt.seed = seeds(t);
        try {
            const ei::EstimateReport rep = ei::estimate(st, two_block_template(), 2, eopt);
            return std::make_pair(rep.theta_hat.eigenvalues[0], rep.theta_hat.masses[0]);
        } catch (const std::exception&) {
            return std::make_pair(std::nan(""), std::nan(""));
        }
    });
}

std::vector<double> finite_values(const std::vector<std::pair<double, double>>& xs,
                                  bool first) {
    std::vector<double> out;
    for (const auto& [a, t] : xs)
        if (std::isfinite(first ? a : t)) out.push_back(first ? a : t);
    return out;
}

void progress(const std::string& msg) { std::cerr << msg << "\n"; }

int reproduce_table2(const Options& opt, std::ostream& os) {
    const std::vector<std::pair<int, int>> rows = {
        {10, 20}, {20, 40}, {40, 80}, {80, 160}, {160, 320}, {320, 640}};
    const std::vector<double> ref_bias = {-0.0331, -0.0112, -0.0019,
                                          -0.0003, -0.0003, 0.0001};
    const std::vector<double> ref_mse = {0.0495, 0.0126, 0.0030,
                                         0.0008, 0.0002, 0.0000};
    const std::vector<double> ref_anderson_bias(6, -1.9994);
    const int trials = opt.trials >= 1 ? opt.trials : 200;
    os << "p,n,sei_bias,sei_mse,anderson_bias,known_u_bias,"
          "ref_sei_bias,ref_sei_mse,ref_anderson_bias\n";
    const ei::PopulationModel model({{2.0, 0.5}, {1.0, 0.5}});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto [p, n] = rows[r];
        progress("table 2: p=" + std::to_string(p));
        const auto est = run_two_block(p, n, 2, trials, opt.seed + r);
        const BiasMse sei = bias_mse(finite_values(est, true), 2.0);
        // baselines on the same ensemble shape (fresh draws)
        const TrialSeeder seeds{opt.seed + 1000 + r};
        const auto base = ei::run_trials<std::pair<double, double>>(trials, [&](int t) {
            ei::SampleSpec spec;
            spec.p = p;
            spec.n = n;
            spec.beta = 2;
            spec.seed = seeds(t);
            spec.rotation = ei::Rotation::haar;
            const Eigen::MatrixXcd X = ei::sample_data(model, spec);
            const Eigen::MatrixXcd S = ei::scm_from_data(X);
            const ei::TraceStats st = ei::trace_powers(S, 1, n, 2);
            const std::vector<int> mult = {p / 2, p - p / 2};
            const double and_a = ei::anderson_mle(st.eigenvalues, mult)[0];
            const Eigen::MatrixXcd U =
                ei::haar_rotation(p, 2, spec.seed ^ 0x5a5a5a5aULL);
            const double known_a = ei::known_u_estimate(S, U, mult)[0];
            return std::make_pair(and_a, known_a);
        });
        const BiasMse anderson = bias_mse(finite_values(base, true), 2.0);
        const BiasMse known = bias_mse(finite_values(base, false), 2.0);
        os << p << "," << n << "," << fmt17(sei.bias) << "," << fmt17(sei.mse) << ","
           << fmt17(anderson.bias) << "," << fmt17(known.bias) << ","
           << ref_bias[r] << "," << ref_mse[r] << "," << ref_anderson_bias[r] << "\n";
    }
    return 0;
}

int reproduce_table45(const Options& opt, std::ostream& os, bool table5) {
    struct Row {
        int p, n, beta;
        double ref_bias, ref_mse;
    };
    // sub-table (c) n = 2p, both fields (the acceptance-criterion regime).
    // The published tables carry swapped captions (the asymptotic covariance
    // and the tables' own MSE*p^2 scaling columns both identify the "t" table
    // as the a-estimates and vice versa); references below are matched to the
    // parameter actually reported in each row.
    const std::vector<Row> rows_t4 = {
        {20, 40, 2, 0.0251, 0.0134},  {40, 80, 2, 0.0049, 0.0028},
        {80, 160, 2, 0.0015, 0.0007}, {160, 320, 2, 0.0004, 0.0002},
        {20, 40, 1, -0.0182, 0.0205}, {40, 80, 1, -0.0175, 0.0052},
        {80, 160, 1, -0.0115, 0.0014}, {160, 320, 1, -0.0067, 0.0004}};
    const std::vector<Row> rows_t5 = {
        {20, 40, 2, -0.0119, 0.0420},  {40, 80, 2, -0.0017, 0.0109},
        {80, 160, 2, -0.0005, 0.0028}, {160, 320, 2, -0.0004, 0.0007},
        {20, 40, 1, 0.1085, 0.1020},   {40, 80, 1, 0.0563, 0.0255},
        {80, 160, 1, 0.0290, 0.0063},  {160, 320, 1, 0.0151, 0.0016}};
    const auto& rows = table5 ? rows_t5 : rows_t4;
    const double truth = table5 ? 2.0 : 0.5;
    const int trials = opt.trials >= 1 ? opt.trials : 200;
    os << "p,n,beta,bias,mse,ref_bias,ref_mse\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& row = rows[r];
        progress("table " + std::string(table5 ? "5" : "4") + ": p=" +
                 std::to_string(row.p) + " beta=" + std::to_string(row.beta));
        const auto est = run_two_block(row.p, row.n, row.beta, trials, opt.seed + r);
        const BiasMse bm = bias_mse(finite_values(est, table5), truth);
        os << row.p << "," << row.n << "," << row.beta << "," << fmt17(bm.bias)
           << "," << fmt17(bm.mse) << "," << row.ref_bias << "," << row.ref_mse
           << "\n";
    }
    return 0;
}

int reproduce_table6(const Options& opt, std::ostream& os) {
    struct Row {
        int p, n;
        double ref_a_bias, ref_t_bias, ref_sph, ref_two;
    };
    const std::vector<Row> rows = {{20, 20, 0.1050, -0.0753, 0.9773, 0.9845},
                                   {40, 40, 0.0558, -0.0470, 0.9850, 0.9898},
                                   {80, 80, 0.0283, -0.0255, 0.9813, 0.9868}};
    const int trials = opt.trials >= 1 ? opt.trials : 200;
    os << "p,n,a_bias,t_bias,sphericity_acceptance,two_block_acceptance,"
          "ref_a_bias,ref_t_bias,ref_sphericity,ref_two_block\n";
    const ei::PopulationModel model({{2.0, 1.0}});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& row = rows[r];
        progress("table 6: p=" + std::to_string(row.p));
        const TrialSeeder seeds{opt.seed + r};
        struct Cell {
            double a = std::nan("");
            double t = std::nan("");
            bool sph_accept = false;
            bool two_accept = false;
        };
        const auto cells = ei::run_trials<Cell>(trials, [&](int t) {
            Cell cell;
            ei::SampleSpec spec;
            spec.p = row.p;
            spec.n = row.n;
            spec.beta = 2;
            spec.seed = seeds(t);
            const Eigen::MatrixXcd X = ei::sample_data(model, spec);
            const ei::TraceStats full =
                ei::trace_powers(ei::scm_from_data(X), 2, row.n, 2);
            cell.sph_accept = !ei::sphericity_test(full).reject;
            ei::ThetaVector tpl = two_block_template();
            tpl.eigenvalues = {2.5, 1.0};  // overspecified start away from truth
            ei::EstimateOptions eopt;
            eopt.seed = seeds(t);
            try {
                auto [est, test] = ei::estimate_then_test(X, row.n, 2, tpl, 2, 2, eopt);
                cell.a = est.theta_hat.eigenvalues[0];
                cell.t = est.theta_hat.masses[0];
                cell.two_accept = !test.reject;
            } catch (const std::exception&) {
            }
            return cell;
        });
        double a_bias = 0, t_bias = 0, sph = 0, two = 0;
        int ok = 0;
        for (const auto& cell : cells) {
            sph += cell.sph_accept ? 1.0 : 0.0;
            two += cell.two_accept ? 1.0 : 0.0;
            if (std::isfinite(cell.a)) {
                a_bias += cell.a - 2.0;
                t_bias += cell.t - 1.0;
                ++ok;
            }
        }
        if (ok > 0) {
            a_bias /= ok;
            t_bias /= ok;
        }
        os << row.p << "," << row.n << "," << fmt17(a_bias) << "," << fmt17(t_bias)
           << "," << fmt17(sph / trials) << "," << fmt17(two / trials) << ","
           << row.ref_a_bias << "," << row.ref_t_bias << "," << row.ref_sph << ","
           << row.ref_two << "\n";
    }
    return 0;
}

int reproduce_table7(const Options& opt, std::ostream& os) {
    struct Row {
        int p, n;
        double ref_k1, ref_k2;
    };
    const std::vector<Row> rows = {{40, 80, 0.217, 0.783},
                                   {80, 160, 0.0, 1.0},
                                   {160, 320, 0.0, 1.0}};
    const int trials = opt.trials >= 1 ? opt.trials : 100;
    const ei::PopulationModel model({{2.0, 0.5}, {1.0, 0.5}});
    os << "p,n,pr_k1,pr_k2,ref_pr_k1,ref_pr_k2\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& row = rows[r];
        progress("table 7: p=" + std::to_string(row.p));
        const TrialSeeder seeds{opt.seed + r};
        const auto ks = ei::run_trials<int>(trials, [&](int t) {
            ei::SampleSpec spec;
            spec.p = row.p;
            spec.n = row.n;
            spec.beta = 2;
            spec.seed = seeds(t);
            const Eigen::MatrixXcd X = ei::sample_data(model, spec);
            ei::EstimateOptions eopt;
            eopt.seed = seeds(t);
            eopt.restarts = 2;
            eopt.nm.max_iter = 800;
            eopt.nm.x_tol = 1e-7;
            eopt.nm.f_tol = 1e-10;
            try {
                return ei::select_order(X, row.n, 2, opt.k_max, eopt).k_hat;
            } catch (const std::exception&) {
                return 0;
            }
        });
        double k1 = 0, k2 = 0;
        for (int k : ks) {
            k1 += k == 1 ? 1.0 : 0.0;
            k2 += k == 2 ? 1.0 : 0.0;
        }
        os << row.p << "," << row.n << "," << fmt17(k1 / trials) << ","
           << fmt17(k2 / trials) << "," << row.ref_k1 << "," << row.ref_k2 << "\n";
    }
    return 0;
}

int reproduce_table8(const Options& opt, std::ostream& os) {
    struct Row {
        int p, n, beta;
        double ref_bias, ref_mse;
    };
    // sub-table (a) n = p
    const std::vector<Row> rows = {
        {40, 40, 2, -0.1168, 2.5352}, {80, 80, 2, -0.0833, 1.2419},
        {160, 160, 2, -0.0371, 0.6318}, {40, 40, 1, -0.0427, 4.9949},
        {80, 80, 1, -0.03662, 2.4994}, {160, 160, 1, 0.03751, 1.2268}};
    const int trials = opt.trials >= 1 ? opt.trials : 300;
    os << "p,n,beta,bias,mse,mse_times_p,ref_bias,ref_mse\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& row = rows[r];
        progress("table 8: p=" + std::to_string(row.p) + " beta=" +
                 std::to_string(row.beta));
        const ei::PopulationModel model(
            {{10.0, 1.0 / row.p}, {1.0, 1.0 - 1.0 / row.p}});
        const TrialSeeder seeds{opt.seed + r};
        const auto est = ei::run_trials<double>(trials, [&](int t) {
            ei::SampleSpec spec;
            spec.p = row.p;
            spec.n = row.n;
            spec.beta = row.beta;
            spec.seed = seeds(t);
            const ei::TraceStats st = ei::sample_trace_stats(model, spec, 2);
            ei::EstimateOptions eopt;
            eopt.seed = seeds(t);
            try {
                return ei::spike_value(ei::spiked_estimate(st, 1.0, 1, eopt));
            } catch (const std::exception&) {
                return std::nan("");
            }
        });
        std::vector<double> ok;
        for (double a : est)
            if (std::isfinite(a)) ok.push_back(a);
        const BiasMse bm = bias_mse(ok, 10.0);
        os << row.p << "," << row.n << "," << row.beta << "," << fmt17(bm.bias)
           << "," << fmt17(bm.mse) << "," << fmt17(bm.mse * row.p) << ","
           << row.ref_bias << "," << row.ref_mse << "\n";
    }
    return 0;
}

int reproduce_table910(const Options& opt, std::ostream& os, bool ledoit) {
    struct Row {
        int p, n;
        bool spiked;
        double ref;
    };
    const std::vector<Row> rows_sph = {{40, 40, false, 0.9487},
                                       {80, 80, false, 0.9496},
                                       {80, 40, true, 0.0080},
                                       {160, 40, true, 0.0002},
                                       {320, 10, true, 0.6288}};
    const std::vector<Row> rows_lw = {{40, 40, false, 0.9448},
                                      {80, 80, false, 0.9540},
                                      {80, 40, true, 0.0008},
                                      {160, 40, true, 0.0070},
                                      {320, 10, true, 0.6533}};
    const auto& rows = ledoit ? rows_lw : rows_sph;
    const int trials = opt.trials >= 1 ? opt.trials : 500;
    os << "p,n,sigma,acceptance,ref_acceptance\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& row = rows[r];
        progress("table " + std::string(ledoit ? "10" : "9") + ": p=" +
                 std::to_string(row.p) + " n=" + std::to_string(row.n));
        const ei::PopulationModel model =
            row.spiked ? ei::PopulationModel(
                             {{10.0, 1.0 / row.p}, {1.0, 1.0 - 1.0 / row.p}})
                       : ei::PopulationModel::identity();
        const TrialSeeder seeds{opt.seed + r};
        const auto accepts = ei::run_trials<int>(trials, [&](int t) {
            ei::SampleSpec spec;
            spec.p = row.p;
            spec.n = row.n;
            spec.beta = 1;
            spec.seed = seeds(t);
            if (ledoit) {
                const Eigen::MatrixXcd S = ei::sample_scm(model, spec);
                return ei::ledoit_wolf(S, row.p, row.n).reject ? 0 : 1;
            }
            const ei::TraceStats st = ei::sample_trace_stats(model, spec, 2);
            return ei::sphericity_test(st).reject ? 0 : 1;
        });
        double acc = 0;
        for (int a : accepts) acc += a;
        os << row.p << "," << row.n << ","
           << (row.spiked ? "diag(10;1..1)" : "identity") << ","
           << fmt17(acc / trials) << "," << row.ref << "\n";
    }
    return 0;
}

int cmd_reproduce(const Options& opt) {
    std::ofstream file;
    std::ostream& os = open_sink(opt, file);
    switch (opt.table) {
        case 2: return reproduce_table2(opt, os);
        case 4: return reproduce_table45(opt, os, false);
        case 5: return reproduce_table45(opt, os, true);
        case 6: return reproduce_table6(opt, os);
        case 7: return reproduce_table7(opt, os);
        case 8: return reproduce_table8(opt, os);
        case 9: return reproduce_table910(opt, os, false);
        case 10: return reproduce_table910(opt, os, true);
        default: throw UsageError("reproduce: unsupported table id");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eigeninfer: statistical eigen-inference for large sample covariance matrices"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--model", opt.model_spec, "blocks a1:t1,a2:t2,...");
        sub->add_option("--spike", opt.spike_spec, "spike a[,count]");
        sub->add_option("--p", opt.p, "dimension");
        sub->add_option("--n", opt.n, "sample count");
        sub->add_option("--beta", opt.beta, "1 real, 2 complex")
            ->check(CLI::IsMember({1, 2}));
        sub->add_option("--q", opt.q, "number of trace powers");
        sub->add_option("--trials", opt.trials, "Monte Carlo trials");
        sub->add_option("--seed", opt.seed, "RNG seed");
        sub->add_option("--format", opt.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--out", opt.out_path, "output path (default stdout)");
    };

    CLI::App* moments = app.add_subcommand("moments", "limiting moment table");
    CLI::App* cov = app.add_subcommand("cov", "fluctuation covariance matrix");
    CLI::App* test = app.add_subcommand("test", "hypothesis test");
    CLI::App* estimate = app.add_subcommand("estimate", "parameter estimation");
    CLI::App* order = app.add_subcommand("order", "model-order selection");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo sampling");
    CLI::App* reproduce = app.add_subcommand("reproduce", "reference tables");
    for (CLI::App* sub :
         {moments, cov, test, estimate, order, simulate, reproduce})
        add_common(sub);
    for (CLI::App* sub : {test, estimate, order}) {
        sub->add_option("--input", opt.input_path, "raw data CSV (columns = samples)");
        sub->add_option("--stats", opt.stats_path, "trace-power CSV");
    }
    estimate->add_option("--fix-a", opt.fix_a, "1-based eigenvalue indices held fixed");
    estimate->add_option("--fix-t", opt.fix_t, "1-based mass indices held fixed");
    order->add_option("--kmax", opt.k_max, "largest block count tried");
    reproduce->add_option("--table", opt.table, "table id in {2,4,5,6,7,8,9,10}")
        ->required();
    reproduce->add_option("--kmax", opt.k_max, "largest block count tried (table 7)");
    simulate->add_flag("--raw", opt.raw, "emit one raw data matrix instead of trace stats");
    for (CLI::App* sub : {test, estimate, order, simulate})
        sub->add_flag("--haar", opt.haar, "apply a Haar rotation to the population basis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (moments->parsed()) return cmd_moments(opt);
        if (cov->parsed()) return cmd_cov(opt);
        if (test->parsed()) return cmd_test(opt);
        if (estimate->parsed()) return cmd_estimate(opt);
        if (order->parsed()) return cmd_order(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (reproduce->parsed()) return cmd_reproduce(opt);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ei::NotPositiveDefiniteError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
