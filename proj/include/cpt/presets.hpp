#pragma once

// Built-in parameter sets for the figure-reproduction pipelines.

#include "cpt/config.hpp"

namespace cpt {

/// Frequency-frequency map at t0 = 30 ns: fp x fc grid, 61 x 61.
RunConfig preset_fig2();

/// Duration-frequency map: fc x t0 grid (61 x 81, 0-80 ns), fp fixed at 6.0158 GHz.
RunConfig preset_fig3();

/// Coupling frequency of the on-resonance cut in the fig2 preset, GHz.
inline constexpr double kFig2OnResonanceFc = 5.865;
/// Coupling frequency of the off-resonance cut in the fig2 preset, GHz.
inline constexpr double kFig2OffResonanceFc = 5.73;
/// Detuning of the off-resonance time cut below the dark resonance, GHz.
inline constexpr double kFig4OffResonanceDetuning = 0.08;
/// Pulse duration of the sensitivity curve, ns.
inline constexpr double kInsetT0 = 40.0;

}  // namespace cpt
