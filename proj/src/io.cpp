#include "bellcert/io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace bellcert {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

long long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("expected an integer for " + what + ", got '" + s + "'");
  }
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(what + " is not valid JSON: " + e.what());
  }
}

// Resolves one symbol given either as an integer or as a label string.
int symbol(const json& v, const std::vector<std::vector<std::string>>& labels, std::size_t site,
           const std::string& what) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (site < labels.size()) {
      const auto& l = labels[site];
      for (std::size_t i = 0; i < l.size(); ++i)
        if (l[i] == s) return static_cast<int>(i);
    }
    if (labels.empty()) return static_cast<int>(parse_int(s, what));
    throw InputError("unknown " + what + " label '" + s + "' at site " + std::to_string(site));
  }
  throw InputError(what + " symbols must be integers or label strings");
}

int csv_symbol(const std::string& field, const std::vector<std::vector<std::string>>& labels, std::size_t site,
               const std::string& what) {
  if (site < labels.size()) {
    const auto& l = labels[site];
    for (std::size_t i = 0; i < l.size(); ++i)
      if (l[i] == field) return static_cast<int>(i);
  }
  return static_cast<int>(parse_int(field, what));
}

std::vector<int> tuple(const json& v, std::size_t sites, const std::vector<std::vector<std::string>>& labels,
                       const std::string& what) {
  if (!v.is_array() || v.size() != sites)
    throw InputError(what + " tuple must be an array of length " + std::to_string(sites));
  std::vector<int> out;
  for (std::size_t k = 0; k < sites; ++k) out.push_back(symbol(v[k], labels, k, what));
  return out;
}

void check_range(const std::vector<int>& t, const std::vector<int>& radix, const std::string& what) {
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] < 0 || t[k] >= radix[k])
      throw InputError(what + " symbol " + std::to_string(t[k]) + " out of range at site " + std::to_string(k));
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("field '") + key + "' has the wrong type");
  }
}

std::string join_tuple(const std::vector<int>& t) {
  std::string s;
  for (std::size_t k = 0; k < t.size(); ++k) s += (k ? "," : "") + std::to_string(t[k]);
  return s;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GameSpec parse_game(const std::string& json_text) {
  const json j = parse_json(json_text, "game file");
  if (!j.is_object()) throw InputError("game file must hold a JSON object");
  GameSpec g;
  g.name = j.value("name", std::string("game"));
  g.dims.inputs = field<std::vector<int>>(j, "inputs");
  g.dims.outputs = field<std::vector<int>>(j, "outputs");
  if (j.contains("sites") && field<std::size_t>(j, "sites") != g.dims.inputs.size())
    throw InputError("'sites' disagrees with the length of 'inputs'");
  validate_dims(g.dims);
  const std::size_t sites = g.dims.sites();
  if (j.contains("input_labels")) g.input_labels = field<std::vector<std::vector<std::string>>>(j, "input_labels");
  if (j.contains("output_labels")) g.output_labels = field<std::vector<std::vector<std::string>>>(j, "output_labels");
  g.tags = field<std::vector<Tag>>(j, "tags");

  const std::size_t nin = g.dims.input_tuples();
  const std::size_t nout = g.dims.output_tuples();
  if (!j.contains("input_distribution")) throw InputError("missing field 'input_distribution'");
  const json& dist = j["input_distribution"];
  if (dist.is_string()) {
    if (dist.get<std::string>() != "uniform") throw InputError("input_distribution must be \"uniform\" or a list");
    g.input_distribution.assign(nin, 1.0 / static_cast<double>(nin));
  } else if (dist.is_array()) {
    g.input_distribution.assign(nin, 0.0);
    std::vector<bool> seen(nin, false);
    for (const auto& e : dist) {
      const auto x = tuple(field<json>(e, "x"), sites, g.input_labels, "input");
      check_range(x, g.dims.inputs, "input");
      const std::size_t i = g.dims.encode_inputs(x);
      if (seen[i]) throw InputError("duplicate input_distribution entry for (" + join_tuple(x) + ")");
      seen[i] = true;
      g.input_distribution[i] = field<double>(e, "p");
    }
  } else {
    throw InputError("input_distribution must be \"uniform\" or a list");
  }

  std::map<Tag, std::size_t> tag_pos;
  for (std::size_t t = 0; t < g.tags.size(); ++t) tag_pos[g.tags[t]] = t;
  g.scores.assign(g.tags.size(), std::vector<double>(nin * nout, 0.0));
  std::vector<std::vector<bool>> seen(g.tags.size(), std::vector<bool>(nin * nout, false));
  for (const auto& e : field<json>(j, "scores")) {
    const Tag tag = field<Tag>(e, "tag");
    const auto it = tag_pos.find(tag);
    if (it == tag_pos.end()) throw InputError("score entry uses undeclared tag " + std::to_string(tag));
    const auto x = tuple(field<json>(e, "x"), sites, g.input_labels, "input");
    const auto a = tuple(field<json>(e, "a"), sites, g.output_labels, "output");
    check_range(x, g.dims.inputs, "input");
    check_range(a, g.dims.outputs, "output");
    const std::size_t cell = g.dims.encode_inputs(x) * nout + g.dims.encode_outputs(a);
    if (seen[it->second][cell])
      throw InputError("duplicate score for tag " + std::to_string(tag) + " at x=(" + join_tuple(x) + "), a=(" +
                       join_tuple(a) + ")");
    seen[it->second][cell] = true;
    g.scores[it->second][cell] = field<double>(e, "value");
  }
  for (std::size_t t = 0; t < g.tags.size(); ++t)
    for (std::size_t c = 0; c < nin * nout; ++c)
      if (!seen[t][c])
        throw InputError("missing score for tag " + std::to_string(g.tags[t]) + " at x=(" +
                         join_tuple(g.dims.decode_inputs(c / nout)) + "), a=(" +
                         join_tuple(g.dims.decode_outputs(c % nout)) + ")");
  return validate_game(std::move(g));
}

GameSpec load_game(const std::string& path) { return parse_game(read_file(path)); }

std::string game_to_json(const GameSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["sites"] = spec.dims.sites();
  j["inputs"] = spec.dims.inputs;
  j["outputs"] = spec.dims.outputs;
  j["tags"] = spec.tags;
  if (!spec.input_labels.empty()) j["input_labels"] = spec.input_labels;
  if (!spec.output_labels.empty()) j["output_labels"] = spec.output_labels;
  const std::size_t nin = spec.dims.input_tuples();
  const std::size_t nout = spec.dims.output_tuples();
  json dist = json::array();
  for (std::size_t i = 0; i < nin; ++i)
    if (spec.input_distribution[i] != 0.0)
      dist.push_back({{"x", spec.dims.decode_inputs(i)}, {"p", spec.input_distribution[i]}});
  j["input_distribution"] = dist;
  json scores = json::array();
  for (std::size_t t = 0; t < spec.tags.size(); ++t)
    for (std::size_t c = 0; c < nin * nout; ++c)
      scores.push_back({{"tag", spec.tags[t]},
                        {"x", spec.dims.decode_inputs(c / nout)},
                        {"a", spec.dims.decode_outputs(c % nout)},
                        {"value", spec.scores[t][c]}});
  j["scores"] = scores;
  return j.dump(2) + "\n";
}

ExperimentData parse_trials(std::istream& in, const GameSpec& spec) {
  const std::size_t sites = spec.dims.sites();
  std::string line;
  std::size_t lineno = 0;
  // Header.
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  ExperimentData data;
  if (trim(line).empty()) return data;
  const auto header = split(trim(line), ',');
  std::vector<std::string> expected{"index", "tag"};
  for (std::size_t k = 0; k < sites; ++k) expected.push_back("x" + std::to_string(k));
  for (std::size_t k = 0; k < sites; ++k) expected.push_back("a" + std::to_string(k));
  if (header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw InputError("trials header must be '" + want + "'");
  }
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty()) continue;
    const auto f = split(row, ',');
    const std::string where = "line " + std::to_string(lineno);
    if (f.size() != 2 + 2 * sites) throw InputError(where + ": expected " + std::to_string(2 + 2 * sites) + " fields");
    TrialRecord r;
    const long long idx = parse_int(f[0], where + " index");
    if (idx < 0) throw InputError(where + ": index must be nonnegative");
    r.index = static_cast<std::uint64_t>(idx);
    r.tag = static_cast<Tag>(parse_int(f[1], where + " tag"));
    for (std::size_t k = 0; k < sites; ++k) r.inputs.push_back(csv_symbol(f[2 + k], spec.input_labels, k, where + " input"));
    bool any = false;
    bool all = true;
    for (std::size_t k = 0; k < sites; ++k) {
      if (f[2 + sites + k].empty()) all = false;
      else any = true;
    }
    if (any && !all) throw InputError(where + ": outputs must be all present or all empty");
    if (all)
      for (std::size_t k = 0; k < sites; ++k)
        r.outputs.push_back(csv_symbol(f[2 + sites + k], spec.output_labels, k, where + " output"));
    data.records.push_back(std::move(r));
  }
  validate_data(spec, data);
  return data;
}

ExperimentData load_trials(const std::string& path, const GameSpec& spec) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_trials(in, spec);
}

void write_trials(std::ostream& out, const GameSpec& spec, const ExperimentData& data) {
  const std::size_t sites = spec.dims.sites();
  out << "index,tag";
  for (std::size_t k = 0; k < sites; ++k) out << ",x" << k;
  for (std::size_t k = 0; k < sites; ++k) out << ",a" << k;
  out << '\n';
  for (const auto& r : data.records) {
    out << r.index << ',' << r.tag;
    for (std::size_t k = 0; k < sites; ++k) out << ',' << (k < r.inputs.size() ? std::to_string(r.inputs[k]) : "");
    for (std::size_t k = 0; k < sites; ++k) out << ',' << (k < r.outputs.size() ? std::to_string(r.outputs[k]) : "");
    out << '\n';
  }
}

Behavior parse_behavior(const std::string& json_text) {
  const json j = parse_json(json_text, "behavior file");
  if (!j.is_object()) throw InputError("behavior file must hold a JSON object");
  Behavior b;
  b.dims.inputs = field<std::vector<int>>(j, "inputs");
  b.dims.outputs = field<std::vector<int>>(j, "outputs");
  validate_dims(b.dims);
  const std::size_t nin = b.dims.input_tuples();
  const std::size_t nout = b.dims.output_tuples();
  b.table.assign(nin * nout, 0.0);
  std::vector<bool> seen(nin, false);
  const json table = field<json>(j, "table");
  if (!table.is_object()) throw InputError("behavior 'table' must be an object keyed by input tuples");
  for (const auto& [key, row] : table.items()) {
    std::vector<int> x;
    for (const auto& part : split(key, ',')) x.push_back(static_cast<int>(parse_int(part, "behavior input")));
    if (x.size() != b.dims.sites()) throw InputError("behavior key '" + key + "' has the wrong arity");
    check_range(x, b.dims.inputs, "input");
    const std::size_t i = b.dims.encode_inputs(x);
    if (seen[i]) throw InputError("duplicate behavior row '" + key + "'");
    seen[i] = true;
    if (!row.is_array() || row.size() != nout)
      throw InputError("behavior row '" + key + "' must list " + std::to_string(nout) + " probabilities");
    for (std::size_t o = 0; o < nout; ++o) {
      if (!row[o].is_number()) throw InputError("behavior row '" + key + "' holds a non-number");
      b.table[i * nout + o] = row[o].get<double>();
    }
  }
  for (std::size_t i = 0; i < nin; ++i)
    if (!seen[i]) throw InputError("behavior is missing the row for (" + join_tuple(b.dims.decode_inputs(i)) + ")");
  validate_behavior(b);
  return b;
}

Behavior load_behavior(const std::string& path) { return parse_behavior(read_file(path)); }

std::string behavior_to_json(const Behavior& behavior) {
  json j;
  j["inputs"] = behavior.dims.inputs;
  j["outputs"] = behavior.dims.outputs;
  json table = json::object();
  const std::size_t nout = behavior.dims.output_tuples();
  for (std::size_t i = 0; i < behavior.dims.input_tuples(); ++i) {
    std::vector<double> row(behavior.table.begin() + static_cast<std::ptrdiff_t>(i * nout),
                            behavior.table.begin() + static_cast<std::ptrdiff_t>((i + 1) * nout));
    table[join_tuple(behavior.dims.decode_inputs(i))] = row;
  }
  j["table"] = table;
  return j.dump(2) + "\n";
}

}  // namespace bellcert
