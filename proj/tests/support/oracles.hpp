#pragma once

// Reference values computed independently (mpmath / scipy at high precision)
// before the library existed. Frozen: do not regenerate from library output.

namespace oracle {

// r(2, 1) at H = 0.3: (2^0.6 + 1 - 1) / 2
inline constexpr double kAutocov_2_1_h03 = 0.757858283255199041;

inline constexpr double kMolchan_h010 = 0.357685773422335136;
inline constexpr double kMolchan_h025 = 0.645998003740751968;
inline constexpr double kMolchan_h030 = 0.730282934079922966;

// Black-Scholes call, S = K = 100, vol 0.2, T = 1, r = 0.
inline constexpr double kBsAtm = 7.96556745540579629;

// E[B^H_t W_s] by nested quadrature of the Molchan-Golosov kernel.
inline constexpr double kCross_1_1_h010 = 0.7876875024930169;
inline constexpr double kCross_1_05_h010 = 0.3682186616766982;
inline constexpr double kCross_1_02_h010 = 0.19192206367424514;
inline constexpr double kCross_1_1_h030 = 0.9758034468358743;
inline constexpr double kCross_1_05_h030 = 0.44368045663572275;
inline constexpr double kCross_1_02_h030 = 0.18762053924681235;

}  // namespace oracle

namespace oracle {

// Welch test of {2.1, 3.4, 1.9, 5.6, 4.4} against {6.3, 7.1, 5.2, 8.8, 6.0, 7.7, 9.1} (scipy.stats).
inline constexpr double kWelchStatistic = -4.155368481025623;
inline constexpr double kWelchPValue = 0.0028996247531778395;
inline constexpr double kWelchDof = 8.352039948868612;

// Kolmogorov distribution survival function (scipy.stats.kstwobign).
inline constexpr double kKolmogorovQ_1 = 0.26999967167735456;
inline constexpr double kKolmogorovQ_05 = 0.9639452436648751;

}  // namespace oracle
