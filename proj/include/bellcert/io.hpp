#pragma once

#include <iosfwd>
#include <string>

#include "bellcert/core.hpp"

namespace bellcert {

/// Game file (JSON):
///   {"name": str, "sites": k, "inputs": [..], "outputs": [..], "tags": [..],
///    "input_distribution": "uniform" | [{"x": [..], "p": real}, ...],
///    "scores": [{"tag": t, "x": [..], "a": [..], "value": real}, ...],
///    "input_labels": [[..], ..], "output_labels": [[..], ..]}
/// Distribution entries left out are 0. Every score cell must be listed.
/// With labels present, symbols in "x"/"a" may be given as label strings.
GameSpec parse_game(const std::string& json_text);
GameSpec load_game(const std::string& path);
std::string game_to_json(const GameSpec& spec);

/// Trials file (CSV): header `index,tag,x0,..,a0,..`, one row per attempt.
/// Rows with the null tag may leave the output columns empty.
ExperimentData parse_trials(std::istream& in, const GameSpec& spec);
ExperimentData load_trials(const std::string& path, const GameSpec& spec);
void write_trials(std::ostream& out, const GameSpec& spec, const ExperimentData& data);

/// Behavior file (JSON): {"inputs": [..], "outputs": [..],
///   "table": {"x0,x1": [p(a|x) for each output tuple in index order], ...}}
Behavior parse_behavior(const std::string& json_text);
Behavior load_behavior(const std::string& path);
std::string behavior_to_json(const Behavior& behavior);

std::string read_file(const std::string& path);

}  // namespace bellcert
