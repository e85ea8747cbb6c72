#ifndef CHAPLYGIN_NOISE_CONFIG_HPP
#define CHAPLYGIN_NOISE_CONFIG_HPP

namespace chaplygin {

/// Active driving channels of the projected diffusion.
struct NoiseConfig {
    bool angular = true;           // B^1..B^m
    bool translational = true;     // W^1..W^{n-1}
    bool include_h0_drift = true;  // the dt channel; only used with angular

    bool any_stochastic() const { return angular || translational; }
    bool h0_active() const { return angular && include_h0_drift; }

    static NoiseConfig full() { return {}; }
    static NoiseConfig angular_only() { return {true, false, true}; }
    static NoiseConfig translational_only() { return {false, true, false}; }
    static NoiseConfig none() { return {false, false, false}; }
};

}  // namespace chaplygin

#endif  // CHAPLYGIN_NOISE_CONFIG_HPP
