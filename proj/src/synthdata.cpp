#include "fairfpr/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fairfpr/error.hpp"
#include "fairfpr/rng.hpp"
#include "fairfpr/textio.hpp"

namespace fairfpr {

using nlohmann::json;

int Dataset::class_count() const {
  int c = 0;
  for (int l : identity_labels) c = std::max(c, l + 1);
  return c;
}

std::vector<std::string> Dataset::group_set() const {
  std::set<std::string> s(group_labels.begin(), group_labels.end());
  return {s.begin(), s.end()};
}

void validate(const std::vector<GroupSpec>& specs) {
  if (specs.empty()) throw ConfigError("dataset spec: no groups");
  std::set<std::string> ids;
  for (const auto& g : specs) {
    if (g.group_id.empty()) throw ConfigError("dataset spec: empty group id");
    if (!ids.insert(g.group_id).second)
      throw ConfigError("dataset spec: duplicate group id '" + g.group_id + "'");
    if (g.identity_count < 2)
      throw ConfigError("group '" + g.group_id + "': identity_count must be >= 2");
    if (g.samples_per_identity < 2)
      throw ConfigError("group '" + g.group_id + "': samples_per_identity must be >= 2");
    if (!(g.intra_spread > 0.0))
      throw ConfigError("group '" + g.group_id + "': intra_spread must be > 0");
    if (!(g.center_concentration > 0.0))
      throw ConfigError("group '" + g.group_id + "': center_concentration must be > 0");
  }
}

namespace {

// Unit vector; direction = base + scale * isotropic noise with E||noise|| ~ 1.
std::vector<double> noisy_direction(std::span<const double> base, double scale, Rng& rng) {
  const std::size_t d = base.size();
  const double comp = scale / std::sqrt(static_cast<double>(d));
  std::vector<double> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = base[i] + comp * rng.next_normal();
  const double n = l2_norm(v);
  if (n == 0.0) throw std::runtime_error("generate: degenerate zero vector");
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

Dataset generate(const std::vector<GroupSpec>& specs, std::size_t raw_dim, std::uint64_t seed) {
  validate(specs);
  if (raw_dim < 4) throw ConfigError("generate: raw_dim must be >= 4");

  std::size_t total = 0;
  for (const auto& g : specs) total += g.identity_count * g.samples_per_identity;

  Dataset d;
  d.features = Matrix(total, raw_dim);
  d.identity_labels.reserve(total);
  d.group_labels.reserve(total);
  d.spec = specs;
  d.seed = seed;

  const Rng root = Rng(seed).split("synthdata");
  std::size_t row = 0;
  int next_class = 0;
  for (const auto& g : specs) {
    Rng grng = root.split("group/" + g.group_id);
    std::vector<double> origin(raw_dim, 0.0);
    const std::vector<double> anchor = noisy_direction(origin, 1.0, grng);
    for (std::size_t id = 0; id < g.identity_count; ++id) {
      const std::vector<double> center = noisy_direction(anchor, g.center_concentration, grng);
      for (std::size_t s = 0; s < g.samples_per_identity; ++s) {
        const std::vector<double> x = noisy_direction(center, g.intra_spread, grng);
        std::copy(x.begin(), x.end(), d.features.row(row).begin());
        d.identity_labels.push_back(next_class);
        d.group_labels.push_back(g.group_id);
        ++row;
      }
      ++next_class;
    }
  }
  return d;
}

void save(const Dataset& d, const std::string& path_base) {
  json header;
  header["schema_version"] = 1;
  header["kind"] = "fairfpr-dataset";
  header["seed"] = d.seed;
  header["raw_dim"] = d.raw_dim();
  header["rows"] = d.size();
  header["groups"] = json::array();
  for (const auto& g : d.spec) {
    header["groups"].push_back({{"group", g.group_id},
                                {"identities", g.identity_count},
                                {"samples_per_identity", g.samples_per_identity},
                                {"intra_spread", g.intra_spread},
                                {"center_concentration", g.center_concentration}});
  }
  write_text_file(path_base + ".header.json", header.dump(2) + "\n");

  std::ostringstream csv;
  csv << "identity_label,group_label";
  for (std::size_t j = 0; j < d.raw_dim(); ++j) csv << ",f" << j;
  csv << "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    csv << d.identity_labels[i] << "," << d.group_labels[i];
    for (double x : d.features.row(i)) csv << "," << format_g17(x);
    csv << "\n";
  }
  write_text_file(path_base + ".features.csv", csv.str());
}

Dataset load(const std::string& path_base) {
  const std::string header_path = path_base + ".header.json";
  const json header = parse_json_file(header_path);
  if (!header.is_object() || header.value("kind", "") != "fairfpr-dataset")
    throw ParseError(header_path + ": not a fairfpr dataset header");

  Dataset d;
  d.seed = header.at("seed").get<std::uint64_t>();
  const std::size_t raw_dim = header.at("raw_dim").get<std::size_t>();
  const std::size_t rows = header.at("rows").get<std::size_t>();
  for (const auto& g : header.at("groups")) {
    GroupSpec spec;
    spec.group_id = g.at("group").get<std::string>();
    spec.identity_count = g.at("identities").get<std::size_t>();
    spec.samples_per_identity = g.at("samples_per_identity").get<std::size_t>();
    spec.intra_spread = g.at("intra_spread").get<double>();
    spec.center_concentration = g.at("center_concentration").get<double>();
    d.spec.push_back(spec);
  }

  const std::string csv_path = path_base + ".features.csv";
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + csv_path);

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(csv_path + ":1: missing CSV header");
  ++lineno;
  const auto head = split_csv_line(line);
  if (head.size() != raw_dim + 2 || head[0] != "identity_label" || head[1] != "group_label")
    throw ParseError(csv_path + ":1: bad CSV header for raw_dim " + std::to_string(raw_dim));

  d.features = Matrix(rows, raw_dim);
  d.identity_labels.reserve(rows);
  d.group_labels.reserve(rows);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    if (row >= rows)
      throw ParseError(csv_path + ":" + std::to_string(lineno) + ": more rows than header declares");
    const auto fields = split_csv_line(line);
    const std::string ctx = csv_path + ":" + std::to_string(lineno);
    if (fields.size() != raw_dim + 2)
      throw ParseError(ctx + ": expected " + std::to_string(raw_dim + 2) + " fields, got " +
                       std::to_string(fields.size()));
    d.identity_labels.push_back(static_cast<int>(parse_int(fields[0], ctx + " identity_label")));
    d.group_labels.push_back(fields[1]);
    for (std::size_t j = 0; j < raw_dim; ++j)
      d.features(row, j) = parse_double(fields[2 + j], ctx + " f" + std::to_string(j));
    ++row;
  }
  if (row != rows)
    throw ParseError(csv_path + ": truncated: header declares " + std::to_string(rows) +
                     " rows, file has " + std::to_string(row));

  // Class indices must be 0..c-1 with no gaps.
  const int c = d.class_count();
  std::vector<char> seen(static_cast<std::size_t>(c), 0);
  for (int l : d.identity_labels) {
    if (l < 0) throw ParseError(csv_path + ": negative identity label");
    seen[static_cast<std::size_t>(l)] = 1;
  }
  for (int l = 0; l < c; ++l)
    if (!seen[static_cast<std::size_t>(l)])
      throw ParseError(csv_path + ": identity labels not contiguous (missing " +
                       std::to_string(l) + ")");
  require_finite(d.features, "dataset features");
  return d;
}

std::pair<Dataset, Dataset> split(const Dataset& d, std::size_t holdout_identities_per_group,
                                  std::uint64_t seed) {
  if (holdout_identities_per_group == 0) {
    Dataset eval;
    eval.features = Matrix(0, d.raw_dim());
    eval.seed = d.seed;
    return {d, eval};
  }

  // Identity sets per group, in first-appearance order of groups.
  std::vector<std::string> group_order;
  std::vector<std::vector<int>> group_ids;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& g = d.group_labels[i];
    auto it = std::find(group_order.begin(), group_order.end(), g);
    std::size_t gi;
    if (it == group_order.end()) {
      group_order.push_back(g);
      group_ids.emplace_back();
      gi = group_order.size() - 1;
    } else {
      gi = static_cast<std::size_t>(it - group_order.begin());
    }
    if (!std::count(group_ids[gi].begin(), group_ids[gi].end(), d.identity_labels[i]))
      group_ids[gi].push_back(d.identity_labels[i]);
  }

  std::set<int> holdout;
  const Rng root = Rng(seed).split("split");
  for (std::size_t gi = 0; gi < group_order.size(); ++gi) {
    auto ids = group_ids[gi];
    std::sort(ids.begin(), ids.end());
    if (holdout_identities_per_group >= ids.size())
      throw ConfigError("split: group '" + group_order[gi] + "' has " +
                        std::to_string(ids.size()) + " identities, cannot hold out " +
                        std::to_string(holdout_identities_per_group));
    Rng grng = root.split("group/" + group_order[gi]);
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
      const std::size_t j = grng.next_u64() % (i + 1);
      std::swap(ids[i], ids[j]);
    }
    holdout.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(holdout_identities_per_group));
  }

  // Relabel each part contiguously, keeping ascending order of original ids.
  std::vector<int> train_map(static_cast<std::size_t>(d.class_count()), -1);
  std::vector<int> eval_map(static_cast<std::size_t>(d.class_count()), -1);
  int next_train = 0, next_eval = 0;
  for (int id = 0; id < d.class_count(); ++id) {
    if (holdout.count(id))
      eval_map[static_cast<std::size_t>(id)] = next_eval++;
    else
      train_map[static_cast<std::size_t>(id)] = next_train++;
  }

  std::vector<std::size_t> train_rows, eval_rows;
  for (std::size_t i = 0; i < d.size(); ++i)
    (holdout.count(d.identity_labels[i]) ? eval_rows : train_rows).push_back(i);

  auto take = [&](const std::vector<std::size_t>& rows, const std::vector<int>& label_map,
                  bool is_holdout) {
    Dataset out;
    out.features = Matrix(rows.size(), d.raw_dim());
    out.seed = d.seed;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t src = rows[r];
      std::copy(d.features.row(src).begin(), d.features.row(src).end(),
                out.features.row(r).begin());
      out.identity_labels.push_back(label_map[static_cast<std::size_t>(d.identity_labels[src])]);
      out.group_labels.push_back(d.group_labels[src]);
    }
    for (const auto& g : d.spec) {
      GroupSpec gs = g;
      gs.identity_count = is_holdout ? holdout_identities_per_group
                                     : g.identity_count - holdout_identities_per_group;
      out.spec.push_back(gs);
    }
    return out;
  };

  return {take(train_rows, train_map, false), take(eval_rows, eval_map, true)};
}

}  // namespace fairfpr
