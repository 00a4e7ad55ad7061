#include "pila/checkpoint.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

namespace pila {
namespace {

using nlohmann::json;

json bounds_json(const mogi::VariableBounds& b) {
  json j;
  for (std::size_t i = 0; i < mogi::kNumVariables; ++i)
    j[std::string(mogi::variable_name(static_cast<mogi::Variable>(i)))] = {b[i].min, b[i].max};
  return j;
}

mogi::VariableBounds bounds_from(const json& j) {
  mogi::VariableBounds b;
  auto get = [&](const char* k) { return mogi::Range{j.at(k).at(0).get<double>(), j.at(k).at(1).get<double>()}; };
  b.x_m = get("xm");
  b.y_m = get("ym");
  b.depth = get("depth");
  b.volume = get("dv");
  b.validate();
  return b;
}

json pila_config_json(const PilaConfig& c) {
  return {{"rank", c.rank},       {"hidden", c.hidden},
          {"beta", c.beta},       {"lambda", c.lambda},
          {"anneal_epochs", c.anneal_epochs}, {"prior", std::string(prior_mode_name(c.prior))},
          {"residual", c.residual}, {"clip", c.clip},
          {"coefficient_init_std", c.coefficient_init_std}};
}

PilaConfig pila_config_from(const json& j) {
  PilaConfig c;
  c.rank = j.at("rank").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.beta = j.at("beta").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.anneal_epochs = j.at("anneal_epochs").get<std::size_t>();
  c.prior = parse_prior_mode(j.at("prior").get<std::string>());
  c.residual = j.at("residual").get<bool>();
  c.clip = j.at("clip").get<double>();
  c.coefficient_init_std = j.at("coefficient_init_std").get<double>();
  return c;
}

json hvae_config_json(const HvaeConfig& c) {
  return {{"rank", c.rank},
          {"hidden", c.hidden},
          {"combiner_hidden", c.combiner_hidden},
          {"beta", c.beta},
          {"lambdas", c.lambdas},
          {"warmup_epochs", c.warmup_epochs},
          {"calibration_ratio", c.calibration_ratio},
          {"calibrated", c.calibrated},
          {"prior_mean", c.prior_mean},
          {"prior_std", c.prior_std}};
}

HvaeConfig hvae_config_from(const json& j) {
  HvaeConfig c;
  c.rank = j.at("rank").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.combiner_hidden = j.at("combiner_hidden").get<std::size_t>();
  c.beta = j.at("beta").get<double>();
  c.lambdas = j.at("lambdas").get<std::array<double, 3>>();
  c.warmup_epochs = j.at("warmup_epochs").get<std::size_t>();
  c.calibration_ratio = j.at("calibration_ratio").get<double>();
  c.calibrated = j.at("calibrated").get<bool>();
  c.prior_mean = j.at("prior_mean").get<double>();
  c.prior_std = j.at("prior_std").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const InverseModel& model, const std::filesystem::path& path) {
  const ModelContext& ctx = model.context();
  json j;
  j["format"] = "pila-checkpoint";
  j["version"] = kCheckpointVersion;
  j["kind"] = std::string(model.kind());
  if (const auto* p = dynamic_cast<const PilaModel*>(&model)) {
    j["config"] = pila_config_json(p->config());
    j["residual_weight"] = p->residual_weight();
    j["dims"] = {{"observation", ctx.dim()}, {"rank", p->config().rank}};
  } else if (const auto* h = dynamic_cast<const HvaeModel*>(&model)) {
    j["config"] = hvae_config_json(h->config());
    j["dims"] = {{"observation", ctx.dim()}, {"rank", h->config().rank}};
  } else {
    throw std::invalid_argument(fmt::format("save_checkpoint: unsupported model kind '{}'", model.kind()));
  }
  j["bounds"] = bounds_json(ctx.bounds);
  j["poisson"] = ctx.poisson;
  json geom = json::array();
  for (const auto& s : ctx.geometry.stations()) geom.push_back({{"id", s.id}, {"x_km", s.x_km}, {"y_km", s.y_km}});
  j["geometry"] = geom;
  j["standardizer"] = {{"mean", ctx.standardizer.mean}, {"scale", ctx.standardizer.scale}};
  json params = json::array();
  for (const auto& p : model.params().all()) {
    const auto v = p.value.values();
    params.push_back({{"name", p.name},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"values", std::vector<double>(v.begin(), v.end())}});
  }
  j["params"] = params;

  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write checkpoint '{}'", path.string()));
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error(fmt::format("error writing checkpoint '{}'", path.string()));
}

std::unique_ptr<InverseModel> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open checkpoint '{}'", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(fmt::format("checkpoint '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  try {
    if (j.at("format") != "pila-checkpoint") throw std::runtime_error("not a pila checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw std::runtime_error(fmt::format("unsupported checkpoint version {} (expected {})", version,
                                           kCheckpointVersion));
    ModelContext ctx;
    std::vector<mogi::Station> stations;
    for (const auto& s : j.at("geometry"))
      stations.push_back({s.at("id").get<std::string>(), s.at("x_km").get<double>(), s.at("y_km").get<double>()});
    ctx.geometry = mogi::StationGeometry(std::move(stations));
    ctx.bounds = bounds_from(j.at("bounds"));
    ctx.poisson = j.at("poisson").get<double>();
    ctx.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    ctx.standardizer.scale = j.at("standardizer").at("scale").get<std::vector<double>>();
    if (j.at("dims").at("observation").get<std::size_t>() != ctx.dim())
      throw std::runtime_error("dims.observation disagrees with the stored geometry");

    ModelSettings settings;
    settings.kind = parse_model_kind(j.at("kind").get<std::string>());
    if (settings.kind == ModelKind::pila)
      settings.pila = pila_config_from(j.at("config"));
    else
      settings.hvae = hvae_config_from(j.at("config"));
    auto model = make_model(settings, std::move(ctx), 0);

    ParameterSet& ps = model->params();
    const auto& stored = j.at("params");
    if (stored.size() != ps.size())
      throw std::runtime_error(fmt::format("checkpoint holds {} tensors, model expects {}", stored.size(), ps.size()));
    for (const auto& p : stored) {
      const auto name = p.at("name").get<std::string>();
      const auto id = ps.find(name);
      if (!id) throw std::runtime_error(fmt::format("unexpected parameter '{}'", name));
      Tensor& dst = ps.value(*id);
      const Shape shape{p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>()};
      if (shape != dst.shape()) throw ShapeError("checkpoint parameter " + name, shape, dst.shape());
      dst = Tensor(shape, p.at("values").get<std::vector<double>>());
    }
    if (auto* pm = dynamic_cast<PilaModel*>(model.get())) pm->set_residual_weight(j.at("residual_weight").get<double>());
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error(fmt::format("malformed checkpoint '{}': {}", path.string(), e.what()));
  }
}

}  // namespace pila
