#pragma once

#include "gseq/errors.hpp"
#include "gseq/group.hpp"
#include "gseq/random.hpp"

#include <cstdint>
#include <vector>

namespace gseq::testing {

/// A subset of Dih_p built so the decomposition has three blocks: two L0
/// blocks of the form mu * 2^k (so their union is dissociated while
/// 2^16 < p) and one L1 block whose planted odd/even split puts delta at a
/// small positive x outside the lacunary span. The rest is `e_size`
/// elements with |x| <= width.
inline std::vector<Elem> engineered_dihedral(const GroupSpec& g, std::size_t e_size, std::int64_t width,
                                             std::int64_t delta_x, Rng& rng)
{
    const std::int64_t p = g.p();
    // delta must stay outside the span of the lacunary block: |delta / mu| >= 2^16
    std::int64_t mu = 0;
    do
        mu = 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(p - 1)));
    while (std::llabs(g.lift(mod_mul(mod(delta_x, p), mod_inverse(mu, p), p))) < (std::int64_t{1} << 16));
    ElemSet used;
    std::vector<Elem> a;
    auto add = [&](const Elem& e) {
        if (g.is_identity(e) || !used.insert(e).second)
            return false;
        a.push_back(e);
        return true;
    };
    for (int k = 0; k < 16; ++k)
        add(g.elem(mod_mul(mu, std::int64_t{1} << k, p), 0));

    const std::int64_t lac_sum = mod_mul(mu, (std::int64_t{1} << 16) - 1, p);
    while (true) {
        std::vector<std::int64_t> y(8);
        for (int i = 0; i < 7; ++i)
            y[i] = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(p)));
        // odd half y0..y3, even half y4..y7: lac_sum + (y0+y1+y2+y3) - (y4+y5+y6+y7) = delta_x
        y[7] = mod(lac_sum + y[0] + y[1] + y[2] + y[3] - y[4] - y[5] - y[6] - delta_x, p);
        bool ok = true;
        for (std::int64_t v : y)
            ok = ok && std::llabs(g.lift(v)) > 4 * width;
        ElemSet s;
        for (std::int64_t v : y)
            ok = ok && s.insert(g.elem(v, 1)).second && !used.contains(g.elem(v, 1));
        if (!ok)
            continue;
        for (std::int64_t v : y)
            add(g.elem(v, 1));
        break;
    }
    if (e_size + 1 > static_cast<std::size_t>(2 * (2 * width + 1)))
        throw InvalidInput("width too small for the requested |E|");
    while (a.size() < 24 + e_size) {
        const std::int64_t x = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(2 * width + 1))) - width;
        add(g.elem(x, static_cast<std::uint32_t>(uniform_index(rng, 2))));
    }
    return a;
}

} // namespace gseq::testing
