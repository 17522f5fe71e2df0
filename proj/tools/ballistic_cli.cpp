#include "ballistic/montecarlo.hpp"
#include "ballistic/reference.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace ballistic;
using nlohmann::json;

namespace {

enum class Out { Text, Csv, Json };

struct Options {
    std::string p = "1/2";
    std::string out = "text";
    std::string rule = "spin";
    std::string spec = "delta1";
    bool assert_checks = false;
    bool trace = false;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

// Thrown by commands whose --assert check failed; the output has been written.
struct CheckFailed {};

Out out_mode(const Options& o)
{
    if (o.out == "csv")
        return Out::Csv;
    if (o.out == "json")
        return Out::Json;
    return Out::Text;
}

json number(double x)
{
    if (!std::isfinite(x))
        return nullptr;
    return x;
}

json estimate_json(const Estimate& e)
{
    auto [lo, hi] = e.ci95();
    return {{"point", number(e.point)},         {"stderr", number(e.std_err)},
            {"n_replicas", e.n_replicas},       {"censored_fraction", number(e.censored_fraction)},
            {"bias_bound", number(e.bias_bound)}, {"ci95", {number(lo), number(hi)}}};
}

json chi2_json(const ChiSquare& c)
{
    return {{"statistic", c.statistic}, {"dof", c.dof}, {"p_value", c.p_value}, {"bins", c.bins_used}};
}

json plan_json(const ExperimentPlan& plan)
{
    return {{"spec", plan.spec.to_string()}, {"p", to_string(plan.params.p)}, {"rule", to_string(plan.params.rule)},
            {"n", plan.n},                   {"replicas", plan.replicas},     {"seed", plan.seed},
            {"safety_margin", plan.safety_margin}, {"core", plan.core}};
}

void csv_row(std::ostream& os, const std::string& observable, const std::string& at, const Estimate& e)
{
    os << observable << ',' << at << ',' << std::setprecision(17) << e.point << ',' << e.std_err << ',' << e.n_replicas
       << ',' << e.censored_fraction << '\n';
}

const char* csv_header = "observable,at,point,stderr,n_replicas,censored_fraction\n";

std::string text_estimate(const Estimate& e)
{
    std::ostringstream os;
    os << std::setprecision(8) << e.point << " +- " << std::setprecision(3) << e.std_err;
    if (e.bias_bound > 0)
        os << " (bias <= " << e.bias_bound << ")";
    if (e.censored_fraction > 0)
        os << " [censored " << e.censored_fraction << "]";
    return os.str();
}

ExperimentPlan make_plan(const Options& o, long n, long replicas)
{
    ExperimentPlan plan;
    plan.spec = InterdistanceSpec::parse(o.spec);
    plan.params.p = parse_rational(o.p);
    plan.params.rule = parse_rule(o.rule);
    plan.n = n;
    plan.replicas = replicas;
    plan.seed = o.seed;
    plan.threads = o.threads;
    return plan;
}

void finish(const Options& o, bool ok)
{
    if (o.assert_checks && !ok)
        throw CheckFailed{};
}

// ---------------------------------------------------------------------------

template <class T>
json cell(const T& v)
{
    if constexpr (std::is_same_v<T, Rational>)
        return to_string(v);
    else
        return v;
}

template <class T>
void print_series(const Options& o, const SeriesTable<T>& t)
{
    if (out_mode(o) == Out::Json) {
        json rows = json::array();
        for (long n = 1; n <= t.N; ++n) {
            const auto i = static_cast<std::size_t>(n);
            rows.push_back({{"n", n}, {"p_n", cell(t.pn[i])}, {"alpha_n", cell(t.alpha[i])}, {"beta_n", cell(t.beta[i])},
                            {"gamma_n", cell(t.gamma[i])}, {"delta_n", cell(t.delta[i])}});
        }
        std::cout << json{{"p", to_string(t.p)}, {"N", t.N}, {"rows", rows}}.dump(2) << '\n';
        return;
    }
    write_csv(std::cout, t);
}

template <class T>
void print_summary(const Options& o, const SeriesTable<T>& t)
{
    auto s = law_summaries(t);
    const double sum = to_double(Rational(s.partial_sum)), mean = to_double(Rational(s.partial_mean));
    if (out_mode(o) == Out::Json) {
        std::cout << json{{"p", to_string(t.p)},         {"N", t.N},
                          {"partial_sum", sum},          {"partial_mean", mean},
                          {"mean_given_finite", mean / sum}, {"tail_asymptotic", s.tail_asymptotic},
                          {"tail_hint", s.tail_bound_hint}, {"regime", to_string(s.regime)}}
                         .dump(2)
                  << '\n';
        return;
    }
    std::cout << std::setprecision(12) << "partial sum        " << sum << "\npartial mean       " << mean
              << "\nmean given finite  " << mean / sum << "\ntail (asymptotic)  " << s.tail_asymptotic
              << "\ntail (anchored)    " << s.tail_bound_hint << "\nregime             " << to_string(s.regime) << '\n';
}

void cmd_series(const Options& o, long N, const std::string& backend, bool check_quartic, bool summary)
{
    const Rational p = parse_rational(o.p);
    if (backend != "exact" && backend != "float")
        throw std::invalid_argument("--backend must be exact or float");
    if (check_quartic) {
        if (backend != "exact")
            throw std::invalid_argument("--check-quartic needs --backend exact");
        auto bad = quartic_residual(build_series<Rational>(p, N));
        if (out_mode(o) == Out::Json)
            std::cout << json{{"p", to_string(p)}, {"N", N}, {"clean", !bad}, {"first_residual", bad ? json(*bad) : json()}}
                             .dump()
                      << '\n';
        else if (bad)
            std::cout << "residual at n=" << *bad << '\n';
        else
            std::cout << "clean up to " << N << '\n';
        finish(o, !bad);
        return;
    }
    if (backend == "exact") {
        auto t = build_series<Rational>(p, N);
        summary ? print_summary(o, t) : print_series(o, t);
    } else {
        auto t = build_series<double>(p, N);
        summary ? print_summary(o, t) : print_series(o, t);
    }
}

void cmd_theory(const Options& o)
{
    const Rational p = parse_rational(o.p);
    auto k = closed_forms(p);
    std::vector<std::pair<std::string, double>> rows = {
        {"q", k.q},
        {"theta", k.theta},
        {"R", k.R},
        {"C_p", k.C_p},
        {"mean_A_given_finite_closed_form", k.meanA_given_finite},
        {"mean_A_given_finite_series", k.meanA_from_quartic},
        {"pA_prefactor", k.pA_prefactor},
        {"pA_exponent", k.pA_exponent},
        {"c0_const", k.c0_const},
        {"c0_exponent", k.c0_exponent},
        {"cplus_const", k.cplus_const},
        {"cplus_exponent", k.cplus_exponent},
        {"skyline_up", k.skyline_sigma_law[0]},
        {"skyline_right_up", k.skyline_sigma_law[1]},
        {"skyline_up_left", k.skyline_sigma_law[2]},
        {"skyline_right_left", k.skyline_sigma_law[3]},
    };
    if (out_mode(o) == Out::Json) {
        json j{{"p", to_string(p)}, {"regime", to_string(k.regime)}};
        for (const auto& [name, v] : rows)
            j[name] = number(v);
        std::cout << j.dump(2) << '\n';
    } else if (out_mode(o) == Out::Csv) {
        std::cout << "name,value\np," << to_string(p) << "\nregime," << to_string(k.regime) << '\n';
        for (const auto& [name, v] : rows)
            std::cout << name << ',' << std::setprecision(17) << v << '\n';
    } else {
        std::cout << std::left << std::setw(30) << "p" << to_string(p) << '\n'
                  << std::setw(30) << "regime" << to_string(k.regime) << '\n';
        for (const auto& [name, v] : rows)
            std::cout << std::setw(30) << name << std::setprecision(10) << v << '\n';
    }
}

void cmd_simulate(const Options& o, long n, long replicas, const std::string& observable, long max_bin)
{
    auto plan = make_plan(o, n, replicas);
    if (o.trace) {
        with_coord(plan.spec, [&](auto tag) {
            using Coord = decltype(tag);
            auto c = sample_config<Coord>(n, plan.spec, plan.params, replica_seed(plan.seed, 0));
            write_event_log(std::cout, resolve(c, plan.params.rule, {true}));
        });
        return;
    }
    const bool q_known = plan.params.rule == CollisionRule::Spin || plan.spec.is_continuous();
    if (observable == "q") {
        auto e = estimate_q(plan);
        const double target = closed_forms(plan.params.p).q;
        const bool ok = !q_known || e.q.agrees(target);
        switch (out_mode(o)) {
        case Out::Json:
            std::cout << json{{"plan", plan_json(plan)}, {"q", estimate_json(e.q)}, {"tail", e.tail},
                              {"theory_q", q_known ? json(target) : json()}}
                             .dump(2)
                      << '\n';
            break;
        case Out::Csv:
            std::cout << csv_header;
            csv_row(std::cout, "q", std::to_string(n), e.q);
            break;
        case Out::Text:
            std::cout << "q = " << text_estimate(e.q) << '\n';
            if (q_known)
                std::cout << "theory q = " << std::setprecision(10) << target << '\n';
        }
        finish(o, ok);
    } else if (observable == "law") {
        auto law = estimate_law_A(plan, max_bin);
        switch (out_mode(o)) {
        case Out::Json: {
            json rows = json::array();
            for (long k = 1; k <= max_bin; ++k)
                rows.push_back({{"n", k}, {"count", law.counts[static_cast<std::size_t>(k)]},
                                {"exact", law.exact[static_cast<std::size_t>(k)]}});
            std::cout << json{{"plan", plan_json(plan)}, {"bins", rows}, {"beyond", law.counts[0]},
                              {"chi2", chi2_json(law.vs_exact)}}
                             .dump(2)
                      << '\n';
            break;
        }
        case Out::Csv:
            std::cout << csv_header;
            for (long k = 1; k <= max_bin; ++k)
                csv_row(std::cout, "P(A=n)", std::to_string(k), law.probability(k));
            break;
        case Out::Text:
            std::cout << "n  count  empirical  exact\n";
            for (long k = 1; k <= max_bin; ++k)
                if (law.counts[static_cast<std::size_t>(k)] || law.exact[static_cast<std::size_t>(k)] > 0)
                    std::cout << k << "  " << law.counts[static_cast<std::size_t>(k)] << "  "
                              << law.probability(k).point << "  " << law.exact[static_cast<std::size_t>(k)] << '\n';
            std::cout << "beyond " << max_bin << " or censored: " << law.counts[0] << "\nchi2 " << law.vs_exact.statistic
                      << " dof " << law.vs_exact.dof << " p-value " << law.vs_exact.p_value << '\n';
        }
        finish(o, law.vs_exact.passes(1e-3));
    } else {
        throw std::invalid_argument("--observable must be q or law");
    }
}

void cmd_oracle(const Options& o, int max_n)
{
    if (max_n < 1 || max_n > 8)
        throw std::invalid_argument("--max-n must be in 1..8");
    long checked = 0, mismatches = 0;
    std::string first;
    for (int n = 1; n <= max_n; ++n)
        for_each_lattice_config(n, [&](const Configuration<std::int64_t>& c) {
            auto rc = to_rational_config(c);
            for (auto rule : {CollisionRule::Spin, CollisionRule::Mutual}) {
                std::string why;
                if (!same_resolution(resolve(c, rule), resolve_reference(rc, rule), &why)) {
                    if (!mismatches++)
                        first = "n=" + std::to_string(n) + " " + to_string(rule) + ": " + why;
                }
                ++checked;
            }
        });
    if (out_mode(o) == Out::Json)
        std::cout << json{{"max_n", max_n}, {"checked", checked}, {"mismatches", mismatches}}.dump() << '\n';
    else
        std::cout << checked << " configurations checked, " << mismatches << " mismatches" << (first.empty() ? "" : "; first: ")
                  << first << '\n';
    finish(o, mismatches == 0);
}

void cmd_skyline(const Options& o, long n, long replicas, long margin)
{
    auto plan = make_plan(o, n, replicas);
    plan.safety_margin = margin;
    auto rep = estimate_theta_and_skyline(plan);
    const bool ok = rep.sigma_fit.passes(1e-3) && rep.delta_right_up_fit.passes(1e-3)
                 && rep.delta_right_left_fit.passes(1e-3) && std::fabs(rep.lag1.point) <= 3 * rep.lag1.std_err;
    static const char* names[] = {"up", "right_up", "up_left", "right_left"};
    if (out_mode(o) == Out::Json) {
        json sigma, delta;
        for (std::size_t k = 0; k < 4; ++k) {
            sigma[names[k]] = rep.sigma_counts[k];
            delta[names[k]] = rep.delta_counts[k];
        }
        std::cout << json{{"plan", plan_json(plan)},
                          {"theta", estimate_json(rep.theta)},
                          {"windows", rep.windows},
                          {"surviving", rep.surviving},
                          {"contaminated", rep.contaminated},
                          {"sigma_counts", sigma},
                          {"delta_counts", delta},
                          {"sigma_fit", chi2_json(rep.sigma_fit)},
                          {"delta_right_up_fit", chi2_json(rep.delta_right_up_fit)},
                          {"delta_right_left_fit", chi2_json(rep.delta_right_left_fit)},
                          {"lag1", estimate_json(rep.lag1)}}
                         .dump(2)
                  << '\n';
    } else if (out_mode(o) == Out::Csv) {
        std::cout << csv_header;
        csv_row(std::cout, "theta", std::to_string(n), rep.theta);
        for (std::size_t k = 0; k < 4; ++k)
            csv_row(std::cout, std::string("sigma_") + names[k], std::to_string(n),
                    proportion(rep.sigma_counts[k], std::max(1L, rep.blocks())));
        csv_row(std::cout, "lag1", std::to_string(n), rep.lag1);
    } else {
        std::cout << "theta = " << text_estimate(rep.theta) << "\nblocks " << rep.blocks() << " from " << rep.surviving << "/"
                  << rep.windows << " windows, " << rep.contaminated << " contaminated\n";
        for (std::size_t k = 0; k < 4; ++k)
            std::cout << std::left << std::setw(12) << names[k] << rep.sigma_counts[k] << '\n';
        std::cout << "chi2 p-values: sigma " << rep.sigma_fit.p_value << ", delta|right-up "
                  << rep.delta_right_up_fit.p_value << ", delta|right-left " << rep.delta_right_left_fit.p_value
                  << "\nlag-1 correlation " << text_estimate(rep.lag1) << '\n';
    }
    finish(o, ok);
}

void cmd_density(const Options& o, const std::vector<double>& times, double core, long replicas)
{
    auto plan = make_plan(o, 0, replicas);
    plan.core = core;
    auto pts = density_profile(plan, times);
    if (out_mode(o) == Out::Json) {
        json rows = json::array();
        for (const auto& pt : pts)
            rows.push_back({{"t", pt.t}, {"c0", estimate_json(pt.c0)}, {"c_plus", estimate_json(pt.c_plus)}});
        std::cout << json{{"plan", plan_json(plan)}, {"points", rows}}.dump(2) << '\n';
        return;
    }
    std::cout << csv_header;
    for (const auto& pt : pts) {
        std::ostringstream t;
        t << pt.t;
        csv_row(std::cout, "c0", t.str(), pt.c0);
        csv_row(std::cout, "c_plus", t.str(), pt.c_plus);
    }
}

int cap_report(const ResourceCapExceeded& e, const Options& o)
{
    if (out_mode(o) == Out::Json)
        std::cout << json{{"error", "resource cap"}, {"achieved_K", e.achieved}, {"message", e.what()}}.dump() << '\n';
    std::cerr << e.what() << "; achieved K = " << e.achieved << '\n';
    return 3;
}

void cmd_lattice(const Options& o, long K, long cap, bool bruteforce, int expected_n, const std::string& at)
{
    const auto rule = parse_rule(o.rule);
    if (expected_n > 0) {
        auto poly = expected_Nk_delta1(rule, expected_n);
        if (out_mode(o) == Out::Json)
            std::cout << json{{"k", expected_n}, {"rule", to_string(rule)}, {"E_N", poly.to_string()}}.dump() << '\n';
        else
            std::cout << "E[N_" << expected_n << "] = " << poly.to_string() << '\n';
        return;
    }
    auto law = bruteforce ? law_A_delta1_bruteforce(rule, static_cast<int>(K)) : law_A_delta1(rule, K, cap);
    std::optional<Rational> p;
    if (!at.empty())
        p = parse_rational(at);
    if (out_mode(o) == Out::Json) {
        json rows = json::array();
        for (long k = 1; k <= law.achieved; ++k) {
            const auto& f = law.pA[static_cast<std::size_t>(k)];
            json row{{"k", k}, {"P", f.to_string()}};
            if (p)
                row["value"] = to_string(f(*p));
            rows.push_back(row);
        }
        std::cout << json{{"rule", to_string(rule)}, {"requested", law.requested}, {"achieved", law.achieved}, {"pA", rows}}
                         .dump(2)
                  << '\n';
    } else {
        if (out_mode(o) == Out::Csv)
            std::cout << (p ? "k,P,value\n" : "k,P\n");
        for (long k = 1; k <= law.achieved; ++k) {
            const auto& f = law.pA[static_cast<std::size_t>(k)];
            const char* sep = out_mode(o) == Out::Csv ? "," : "  ";
            std::cout << k << sep << f.to_string();
            if (p)
                std::cout << sep << to_string(f(*p));
            std::cout << '\n';
        }
    }
    if (law.partial())
        throw ResourceCapExceeded("lattice: K capped at " + std::to_string(cap), law.achieved);
}

json bound_value(const Rational& r)
{
    // bisection endpoints are dyadic and usually exact in binary64
    const double d = r.get_d();
    if (Rational(d) == r)
        return d;
    return to_string(r);
}

void cmd_bounds(const Options& o, bool out_given, long K, double tol, long cap)
{
    auto b = critical_bounds(K, tol, cap);
    if (!out_given || out_mode(o) == Out::Json) {
        std::cout << json{{"K", b.K},
                          {"r_minus", {bound_value(b.r_minus.lo), bound_value(b.r_minus.hi)}},
                          {"r_plus", {bound_value(b.r_plus.lo), bound_value(b.r_plus.hi)}}}
                         .dump()
                  << '\n';
        return;
    }
    std::cout << std::setprecision(10) << "K = " << b.K << "\nr_minus in [" << b.r_minus.lo.get_d() << ", "
              << b.r_minus.hi.get_d() << "]\nr_plus  in [" << b.r_plus.lo.get_d() << ", " << b.r_plus.hi.get_d() << "]\n";
    if (o.trace)
        std::cout << "extinction: " << b.extinction.to_string() << "\nsurvival: " << b.survival.to_string() << '\n';
}

void cmd_identities(const Options& o, long n, long replicas, bool sigma)
{
    auto plan = make_plan(o, n, replicas);
    bool ok = true;
    json j{{"plan", plan_json(plan)}};
    std::ostringstream text;
    if (sigma) {
        plan.params.rule = CollisionRule::Mutual;
        auto rep = estimate_sigma_hat(plan);
        ok = rep.dichotomy_holds();
        j["plan"] = plan_json(plan);
        j["sigma"] = estimate_json(rep.sigma);
        j["q"] = estimate_json(rep.q);
        j["q_from_sigma"] = rep.q_from_sigma;
        j["combined_stderr"] = rep.combined_std_err;
        text << "sigma = " << text_estimate(rep.sigma) << "\nq = " << text_estimate(rep.q)
             << "\n-1 + sqrt(1/p - sigma) = " << rep.q_from_sigma << " (combined stderr " << rep.combined_std_err << ")\n";
    } else {
        auto rep = identity_checks(plan);
        ok = rep.passes();
        j["r"] = estimate_json(rep.r);
        j["s"] = estimate_json(rep.s);
        j["residual"] = estimate_json(rep.residual);
        j["r_target"] = rep.r_target;
        j["s_target"] = rep.s_target;
        j["uncertified_fraction"] = rep.uncertified_fraction;
        text << "r = " << text_estimate(rep.r) << "  target " << rep.r_target << "\ns = " << text_estimate(rep.s)
             << "  target " << rep.s_target << "\nq identity residual = " << text_estimate(rep.residual) << '\n';
    }
    j["pass"] = ok;
    if (out_mode(o) == Out::Json)
        std::cout << j.dump(2) << '\n';
    else
        std::cout << text.str() << (ok ? "pass\n" : "FAIL\n");
    finish(o, ok);
}

} // namespace

int main(int argc, char** argv)
{
    Options o;
    if (const char* e = std::getenv("BALLISTIC_THREADS"))
        o.threads = static_cast<unsigned>(std::max(1, std::atoi(e)));

    CLI::App app{"ballistic: three-speed ballistic annihilation lab"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--p", o.p, "probability of a static particle, exact rational (1/4, 0.3)")->capture_default_str();
    auto* out_opt = app.add_option("--out", o.out, "text, csv or json")
                        ->check(CLI::IsMember({"text", "csv", "json"}))
                        ->capture_default_str();
    app.add_option("--rule", o.rule, "triple-collision rule: spin or mutual")->capture_default_str();
    app.add_option("--spec", o.spec, "interdistance law: delta1, const:d, exp:rate, unif:a,b")->capture_default_str();
    app.add_flag("--assert", o.assert_checks, "exit 1 if the command's check fails");
    app.add_flag("--trace", o.trace, "print the event log (simulate) or the polynomials (bounds)");
    app.add_option("--seed", o.seed, "base seed")->capture_default_str();
    app.add_option("--threads", o.threads, "replica threads (default from BALLISTIC_THREADS)")->capture_default_str();

    long series_N = 100;
    std::string backend = "exact";
    bool check_quartic = false, summary = false;
    auto* series = app.add_subcommand("series", "exact or float table of P(A=n) and its components");
    series->add_option("--N", series_N, "largest n")->capture_default_str();
    series->add_option("--backend", backend, "exact or float")->capture_default_str();
    series->add_flag("--check-quartic", check_quartic, "verify the functional equation coefficient by coefficient");
    series->add_flag("--summary", summary, "partial sum, conditional mean and tail estimates");

    auto* theory = app.add_subcommand("theory", "closed-form constants at p");

    long sim_n = 2000, sim_R = 10000, max_bin = 31;
    std::string observable = "q";
    auto* simulate = app.add_subcommand("simulate", "half-line Monte Carlo: q or the law of A");
    simulate->add_option("--n", sim_n, "particles per window")->capture_default_str();
    simulate->add_option("--replicas", sim_R, "replicas")->capture_default_str();
    simulate->add_option("--observable", observable, "q or law")->capture_default_str();
    simulate->add_option("--max-bin", max_bin, "largest n binned for the law of A")->capture_default_str();

    int oracle_n = 6;
    auto* oracle = app.add_subcommand("oracle-check", "exhaustive engine vs reference comparison on unit spacing");
    oracle->add_option("--max-n", oracle_n, "largest configuration size (<= 8)")->capture_default_str();

    long sky_n = 1500, sky_R = 100, sky_margin = 300;
    auto* skyline = app.add_subcommand("skyline", "theta and the skyline law from full-line windows");
    skyline->add_option("--n", sky_n, "particles per side")->capture_default_str();
    skyline->add_option("--replicas", sky_R, "windows")->capture_default_str();
    skyline->add_option("--margin", sky_margin, "slots kept clear of the window edge")->capture_default_str();

    std::vector<double> times = {0, 50, 200};
    double core = 200;
    long dens_R = 200;
    auto* density = app.add_subcommand("density", "densities of surviving statics and right-movers");
    density->add_option("--times", times, "times")->delimiter(',');
    density->add_option("--core", core, "half-width of the measured region")->capture_default_str();
    density->add_option("--replicas", dens_R, "windows")->capture_default_str();

    long lat_K = 12, lat_cap = lattice_k_cap;
    bool bruteforce = false;
    int expected_n = 0;
    std::string at;
    auto* lattice = app.add_subcommand("lattice", "P(A=k) as polynomials in p for unit spacing");
    lattice->add_option("--K", lat_K, "largest k")->capture_default_str();
    lattice->add_option("--cap", lat_cap, "largest k computed")->capture_default_str();
    lattice->add_flag("--bruteforce", bruteforce, "enumerate configurations instead of the recursion");
    lattice->add_option("--expected-N", expected_n, "print E[#statics - #left-movers] among k particles");
    lattice->add_option("--at", at, "also evaluate at this p");

    long bounds_K = 25, bounds_cap = lattice_k_cap;
    double tol = 1e-7;
    auto* bounds = app.add_subcommand("bounds", "certified bounds on the discrete-model critical point");
    bounds->add_option("--K", bounds_K, "truncation order")->capture_default_str();
    bounds->add_option("--tol", tol, "interval width")->capture_default_str();
    bounds->add_option("--cap", bounds_cap, "largest K computed")->capture_default_str();

    long id_n = 2000, id_R = 20000;
    bool id_sigma = false;
    auto* identities = app.add_subcommand("identities", "Monte Carlo checks of the fate of particle 1, or of sigma");
    identities->add_option("--n", id_n, "particles per window")->capture_default_str();
    identities->add_option("--replicas", id_R, "replicas")->capture_default_str();
    identities->add_flag("--sigma", id_sigma, "estimate sigma under MUTUAL and check the equation for q");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*series)
            cmd_series(o, series_N, backend, check_quartic, summary);
        else if (*theory)
            cmd_theory(o);
        else if (*simulate)
            cmd_simulate(o, sim_n, sim_R, observable, max_bin);
        else if (*oracle)
            cmd_oracle(o, oracle_n);
        else if (*skyline)
            cmd_skyline(o, sky_n, sky_R, sky_margin);
        else if (*density)
            cmd_density(o, times, core, dens_R);
        else if (*lattice)
            cmd_lattice(o, lat_K, lat_cap, bruteforce, expected_n, at);
        else if (*bounds)
            cmd_bounds(o, out_opt->count() > 0, bounds_K, tol, bounds_cap);
        else if (*identities)
            cmd_identities(o, id_n, id_R, id_sigma);
    } catch (const CheckFailed&) {
        return 1;
    } catch (const ResourceCapExceeded& e) {
        return cap_report(e, o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
