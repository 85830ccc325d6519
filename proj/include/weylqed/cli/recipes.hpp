// recipes.hpp — bundled configs reproducing each figure panel

#pragma once

#include <string>
#include <vector>

namespace weylqed::cli {

struct Recipe {
    std::string name;
    std::string description;
    std::string config;
};

inline const std::vector<Recipe>& recipes() {
    static const std::vector<Recipe> r{
        {"fig1b", "bath dispersion on the k_y = 0 plane and its Weyl nodes, M = 0",
         "experiment = bands\nname = fig1b\n[lattice]\noffset = 0\n[numerics]\npoints = 101\nky = 0\n"},
        {"fig1c", "density of states and its low-energy exponent, M = 0, 64^3 grid",
         "experiment = dos\nname = fig1c\n[lattice]\noffset = 0\n[numerics]\ngrid = 64\neta = 0.02\n"
         "fit_min = 0.1\nfit_max = 0.5\n"},
        {"fig1d", "exact vs Markovian spontaneous emission at the Weyl frequency, g = 0.5",
         "experiment = dynamics\nname = fig1d\n[lattice]\noffset = 0\nsize = 22\n[emitter]\nx = 0\ny = 0\nz = 0\n"
         "detuning = 0\ncoupling = 0.5\n[numerics]\nt_max = 40\ndt_out = 0.05\nplateau_from = 30\n"
         "plateau_to = 40\nmarkov = true\n"},
        {"fig1d_inset", "long-time population Z^2 against M at the critical detuning",
         "experiment = boundstate\nname = fig1d_inset\n[emitter]\nx = 0\ny = 0\nz = 0\ndetuning = critical\n"
         "coupling = 0.5\n[numerics]\nmode = residue_sweep\noffsets = 0, 0.5, 1, 1.5, 2\n"},
        {"fig2a", "bound-state photon field around the emitter, M = 0",
         "experiment = boundstate\nname = fig2a\n[lattice]\noffset = 0\n[emitter]\nx = 0\ny = 0\nz = 0\n"
         "detuning = critical\ncoupling = 0.5\n[numerics]\nmode = field\nsize = 126\nwindow = 10\nfit = false\n"},
        {"fig2b", "bound-state photon field around the emitter, M = J",
         "experiment = boundstate\nname = fig2b\n[lattice]\noffset = 1\n[emitter]\nx = 0\ny = 0\nz = 0\n"
         "detuning = critical\ncoupling = 0.5\n[numerics]\nmode = field\nsize = 126\nwindow = 10\nfit = false\n"},
        {"fig2c", "bound-state photon field around the emitter, M = 2J",
         "experiment = boundstate\nname = fig2c\n[lattice]\noffset = 2\n[emitter]\nx = 0\ny = 0\nz = 0\n"
         "detuning = critical\ncoupling = 0.5\n[numerics]\nmode = field\nsize = 126\nwindow = 10\nfit = false\n"},
        {"fig2d", "bound-state decay along xy and z with power-law fits, M = 0",
         "experiment = boundstate\nname = fig2d\n[lattice]\noffset = 0\n[emitter]\nx = 0\ny = 0\nz = 0\n"
         "detuning = critical\ncoupling = 0.5\n[numerics]\nmode = field\nsize = 126\nwindow = 10\nfit = true\n"
         "fit_min = 2\nfit_max = 8\n"},
        {"fig2e", "bound-state decay along xy and z with power-law fits, M = J",
         "experiment = boundstate\nname = fig2e\n[lattice]\noffset = 1\n[emitter]\nx = 0\ny = 0\nz = 0\n"
         "detuning = critical\ncoupling = 0.5\n[numerics]\nmode = field\nsize = 126\nwindow = 10\nfit = true\n"
         "fit_min = 2\nfit_max = 8\n"},
        {"fig2f", "bound-state decay along xy and z with power-law fits, M = 2J",
         "experiment = boundstate\nname = fig2f\n[lattice]\noffset = 2\n[emitter]\nx = 0\ny = 0\nz = 0\n"
         "detuning = critical\ncoupling = 0.5\n[numerics]\nmode = field\nsize = 126\nwindow = 10\nfit = true\n"
         "fit_min = 2\nfit_max = 8\n"},
        {"fig3", "excitation exchange between two A emitters one site apart along z, M = 0, J, 2J",
         "experiment = dynamics\nname = fig3\n[lattice]\nsize = 22\n[emitter.1]\nx = 0\ny = 0\nz = 0\n"
         "detuning = critical\ncoupling = 0.5\n[emitter.2]\nx = 0\ny = 0\nz = 1\ndetuning = critical\n"
         "coupling = 0.5\n[numerics]\nt_max = 300\ndt_out = 0.1\nmarkov = false\noffsets = 0, 1, 2\n"},
        {"fig4a", "spin-model bands along k_z at k_x = pi/2, k_y = 0 for s = 1..9, M = 0",
         "experiment = spinbands\nname = fig4a\n[lattice]\noffset = 0\n[numerics]\ncoupling = 0.5\n"
         "ranges = 1, 3, 5, 7, 9\npoints = 401\nkx_over_pi = 0.5\nky = 0\n"},
        {"fig4b", "spin-model bands along k_z at k_x = pi/2, k_y = 0 for s = 1..9, M = J",
         "experiment = spinbands\nname = fig4b\n[lattice]\noffset = 1\n[numerics]\ncoupling = 0.5\n"
         "ranges = 1, 3, 5, 7, 9\npoints = 401\nkx_over_pi = 0.5\nky = 0\n"},
        {"fig4c", "spin-model bands along k_z at k_x = pi/2, k_y = 0 for s = 1..9, M = 2J",
         "experiment = spinbands\nname = fig4c\n[lattice]\noffset = 2\n[numerics]\ncoupling = 0.5\n"
         "ranges = 1, 3, 5, 7, 9\npoints = 401\nkx_over_pi = 0.5\nky = 0\n"},
        {"fig4d", "spin-model Berry curvature on k_y = 0 and its Weyl nodes, s = 9, M = 0",
         "experiment = berry\nname = fig4d\n[lattice]\noffset = 0\n[numerics]\ncoupling = 0.5\nrange = 9\n"
         "mesh = 64\n"},
        {"fig4e", "spin-model Berry curvature on k_y = 0 and its Weyl nodes, s = 9, M = J",
         "experiment = berry\nname = fig4e\n[lattice]\noffset = 1\n[numerics]\ncoupling = 0.5\nrange = 9\n"
         "mesh = 64\n"},
        {"fig4f", "spin-model Berry curvature on k_y = 0, s = 9, M = 2J (gapped)",
         "experiment = berry\nname = fig4f\n[lattice]\noffset = 2\n[numerics]\ncoupling = 0.5\nrange = 9\n"
         "mesh = 64\n"},
    };
    return r;
}

inline const Recipe* find_recipe(const std::string& name) {
    for (const auto& r : recipes())
        if (r.name == name) return &r;
    return nullptr;
}

} // namespace weylqed::cli
