// Generates a (2,3)(3,2) digraph, solves for pi and prints the headline scales.

#include <cstdio>

#include "dcmlab/dcmlab.hpp"

int main() {
    using namespace dcmlab;
    DegreeModel model;
    model.entries = {{{2, 3}, Fraction::parse("0.5")}, {{3, 2}, Fraction::parse("0.5")}};
    model.linear_types = {{2, 3}, {3, 2}};

    const auto seq = materialize(model, 10000).sequence;
    const auto g = generate(seq, 1);
    const auto sc = scales(seq);
    const auto st = solve(g);

    std::printf("n=%u m=%llu strongly_connected=%d\n", g.n(), static_cast<unsigned long long>(g.m()),
                is_strongly_connected(g).strongly_connected);
    std::printf("nu=%.4f  T_ent=%.3f  d_star=%.3f\n", sc.nu, sc.t_ent, sc.d_star);
    std::printf("n*pi_min=%.4f  n*pi_max=%.4f  (%s, %llu iterations)\n", g.n() * st.pi_min, g.n() * st.pi_max,
                to_string(st.method), static_cast<unsigned long long>(st.iterations));
    return 0;
}
