// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes except those listed in
// kKnownDeviations (which are still reported as FAIL, with measured values).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hzfem/hzfem.hpp"

using namespace hzfem;

namespace
{

const std::set<std::string> kKnownDeviations{"reference_table_p4"};

struct Outcome
{
    std::string name;
    bool passed;
};

std::vector<Outcome> g_outcomes;

void report(const std::string& name, bool passed, const std::string& detail)
{
    std::printf("%s  %-28s %s\n", passed ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    g_outcomes.push_back({name, passed});
}

bool within_rel(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

std::string fmt(const char* f, double a, double b)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// Reference values, level by level: stress, order, displacement, order, divergence, order.
struct Row
{
    double s, os, u, ou, d, od;
};

const Row kP4[3] = {{0.33567012, 0.0, 0.05860521, 0.0, 3.41111411, 0.0},
                    {0.02041247, 4.0, 0.00661542, 3.1, 0.21319463, 4.0},
                    {0.00125425, 4.0, 0.00044841, 3.9, 0.01332466, 4.0}};

void print_levels(const ConvergenceReport& rep)
{
    for (const auto& r : rep.levels)
        std::printf("      level %d: %.8f (%.2f)  %.8f (%.2f)  %.8f (%.2f)\n", r.level, r.interp.stress_l2, r.order_sigma,
                    r.interp.displacement_l2, r.order_u, r.interp.divergence_l2, r.order_div);
}

void check_p4_table(const ConvergenceReport& rep)
{
    int entries_ok = 0, orders_ok = 0;
    double worst_rel = 0.0, worst_order = 0.0;
    for (int l = 0; l < 3; ++l) {
        const auto& r = rep.levels[static_cast<std::size_t>(l)];
        const Row& w = kP4[l];
        const double got[3] = {r.interp.stress_l2, r.interp.displacement_l2, r.interp.divergence_l2};
        const double want[3] = {w.s, w.u, w.d};
        for (int i = 0; i < 3; ++i) {
            worst_rel = std::max(worst_rel, std::abs(got[i] - want[i]) / want[i]);
            entries_ok += within_rel(got[i], want[i], 0.01);
        }
        if (l == 0)
            continue;
        const double og[3] = {r.order_sigma, r.order_u, r.order_div};
        const double ow[3] = {w.os, w.ou, w.od};
        for (int i = 0; i < 3; ++i) {
            worst_order = std::max(worst_order, std::abs(og[i] - ow[i]));
            orders_ok += std::abs(og[i] - ow[i]) <= 0.15;
        }
    }
    std::ostringstream d;
    d << entries_ok << "/9 entries within 1%, " << orders_ok << "/6 orders within 0.15; worst rel "
      << fmt("%.3g, worst order gap %.2f", worst_rel, worst_order);
    report("reference_table_p4", entries_ok == 9 && orders_ok == 6, d.str());
    print_levels(rep);
    std::printf("      reference: 0.33567012 0.05860521 3.41111411 | 0.02041247 0.00661542 0.21319463 | "
                "0.00125425 0.00044841 0.01332466\n");
}

void check_p5_table(const ConvergenceReport& rep)
{
    double max_s = 0.0, max_d = 0.0;
    for (const auto& r : rep.levels) {
        max_s = std::max(max_s, r.interp.stress_l2);
        max_d = std::max(max_d, r.interp.divergence_l2);
    }
    const double u1 = rep.levels[0].interp.displacement_l2, u2 = rep.levels[1].interp.displacement_l2;
    const double order = rep.levels[1].order_u;
    const bool pass = max_s <= 1e-6 && max_d <= 1e-6 && within_rel(u1, 0.01937914, 0.01)
                   && within_rel(u2, 0.00089726, 0.01) && std::abs(order - 4.4) <= 0.15;
    std::ostringstream d;
    d << fmt("stress %.2e, div %.2e", max_s, max_d) << fmt("; u %.8f -> %.8f", u1, u2)
      << " (ref 0.01937914 -> 0.00089726)" << fmt(", order %.3f (ref 4.4 +- %.2f)", order, 0.15);
    report("reference_table_p5", pass, d.str());
    print_levels(rep);
}

void check_true_error_rates(const ConvergenceReport& rep)
{
    const auto& a = rep.levels[1].exact;
    const auto& b = rep.levels[2].exact;
    const double os = convergence_order(a.stress_hdiv(), b.stress_hdiv());
    const double ou = convergence_order(a.displacement_l2, b.displacement_l2);
    report("true_error_rates_p4", os >= 3.8 && ou >= 3.8,
           fmt("levels 2->3: H(div) stress order %.3f, L2 displacement order %.3f (need >= 3.8)", os, ou));
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args)
{
    const std::string cmd = std::string(HZFEM_CLI) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string drop_last_column(const std::string& csv)
{
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line))
        out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

void check_determinism()
{
    const std::string dir = std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp";
    const std::string a = dir + "/hzfem_accept_a.csv", b = dir + "/hzfem_accept_b.csv", c = dir + "/hzfem_accept_c.csv";
    const std::string args = "conv --degree 4 --levels 2 --no-timing --out ";
    const bool ran = run(args + a) == 0 && run(args + b) == 0 && run("conv --degree 4 --levels 2 --out " + c) == 0;
    const std::string sa = slurp(a), sb = slurp(b), sc = slurp(c);
    const bool identical = ran && !sa.empty() && sa == sb;
    const bool timed_same = ran && drop_last_column(sa) == drop_last_column(sc);
    std::ostringstream d;
    d << (identical ? "two --no-timing runs byte-identical" : "CSV differs between runs") << "; timed run "
      << (timed_same ? "identical apart from the seconds column" : "differs in numeric columns") << " ("
      << sa.size() << " bytes)";
    report("determinism", identical && timed_same, d.str());
}

} // namespace

int main()
{
    const auto t0 = std::chrono::steady_clock::now();

    RunConfig p4;
    p4.degree = 4;
    p4.levels = 3;
    const ConvergenceReport rep4 = run_convergence(p4);
    check_p4_table(rep4);
    check_true_error_rates(rep4);

    RunConfig p5;
    p5.degree = 5;
    p5.levels = 2;
    check_p5_table(run_convergence(p5));

    VerifyConfig vc;
    vc.infsup_levels = 3;
    const auto all = run_verify(vc, [](const CertificateReport& r) {
        std::printf("      %s %-34s %.3e (tol %.1e) %s\n", r.passed ? "ok  " : "BAD ", r.name.c_str(), r.measured,
                    r.tolerance, r.witness.c_str());
        std::fflush(stdout);
    });
    bool certs_ok = true, infsup_ok = false;
    int n = 0;
    std::string infsup_detail;
    for (const auto& r : all) {
        if (r.name.rfind("infsup", 0) == 0) {
            infsup_ok = r.passed;
            infsup_detail = r.witness + fmt("; min ratio %.4f (need >= %.1f)", r.measured, r.tolerance);
            continue;
        }
        certs_ok = certs_ok && r.passed;
        ++n;
    }
    report("certificate_suite", certs_ok, std::to_string(n) + " certificates, k = 4 and 5, levels 1-2");
    report("infsup_levels_1_3", infsup_ok, infsup_detail);

    check_determinism();

    int unexpected = 0, known = 0;
    for (const auto& o : g_outcomes) {
        if (o.passed)
            continue;
        (kKnownDeviations.count(o.name) ? known : unexpected) += 1;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("summary: %zu criteria, %d unexpected failure(s), %d known deviation(s), %.0f s\n", g_outcomes.size(),
                unexpected, known, secs);
    return unexpected == 0 ? 0 : 1;
}
