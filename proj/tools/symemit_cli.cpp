// Copyright 2026 The symemit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "symemit/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string mode;
    std::optional<int> traj;
};

symemit::ExperimentConfig resolve(const Overrides &o) {
    symemit::ExperimentConfig c = o.config.empty() ? symemit::ExperimentConfig{} : symemit::load_config(o.config);
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (!o.out.empty()) {
        c.out_dir = o.out;
    }
    if (!o.mode.empty()) {
        c.mode = symemit::parse_emit_mode(o.mode);
    }
    if (o.traj) {
        c.n_traj = *o.traj;
    }
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Shaped single-photon emission and state-transfer simulator"};
    app.set_version_flag("--version", std::string(SYMEMIT_VERSION));
    app.require_subcommand(1);
    Overrides o;
    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", o.config, "INI experiment config")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "seed override");
        sub->add_option("--out", o.out, "output directory override");
        sub->add_option("--mode", o.mode, "emission solver")->check(CLI::IsMember({"oracle", "master", "mc"}));
        sub->add_option("--traj", o.traj, "trajectory count for mc mode")->check(CLI::PositiveNumber);
    };
    auto *synth = app.add_subcommand("synthesize", "schedule, flux and control voltages");
    auto *emit = app.add_subcommand("emit", "emission, homodyne record, symmetry and phase reports");
    auto *transfer = app.add_subcommand("transfer", "state transfer fidelity per T_perp");
    auto *calibrate = app.add_subcommand("calibrate", "contour, chevron map and T1 curve");
    auto *all = app.add_subcommand("all", "every step in sequence");
    for (auto *sub : {synth, emit, transfer, calibrate, all}) {
        add_common(sub);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        symemit::ExperimentConfig c = resolve(o);
        symemit::Json m;
        if (*synth) {
            m = symemit::cmd_synthesize(c);
        } else if (*emit) {
            m = symemit::cmd_emit(c);
        } else if (*transfer) {
            m = symemit::cmd_transfer(c);
        } else if (*calibrate) {
            m = symemit::cmd_calibrate(c);
        } else {
            m = symemit::cmd_all(c);
        }
        std::cout << m["results"].dump(2) << "\n";
        return 0;
    } catch (const symemit::Error &e) {
        std::cerr << "symemit: " << symemit::kind_name(e.kind()) << " error: " << e.what() << "\n";
        return symemit::exit_code(e.kind());
    } catch (const std::exception &e) {
        std::cerr << "symemit: internal error: " << e.what() << "\n";
        return 1;
    }
}
