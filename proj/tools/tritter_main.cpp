// Copyright 2026 The Tritter Authors
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

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "tritter_commands.hpp"

namespace {

constexpr int kValidationError = 1;

}  // namespace

int main(int argc, char **argv) {
    using namespace tritter::cli;

    CLI::App app{"Multiphoton interference, demultiplexer and loss-budget toolkit"};
    app.require_subcommand(1);

    RunOptions opt;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    for (const auto &name : commands()) {
        auto *sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--out", opt.out, "output directory")->capture_default_str();
        sub->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    }
    CLI11_PARSE(app, argc, argv);

    opt.seed = seed;
    opt.format = format == "json" ? Format::json : Format::csv;
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const int status = run(command, opt);
        if (status != 0) std::cerr << command << ": check failed (status " << status << ")\n";
        return status;
    } catch (const std::exception &e) {
        std::cerr << command << ": error: " << e.what() << "\n";
        return kValidationError;
    }
}
