#include "mtl/train/regime.hpp"

#include <algorithm>
#include <cctype>

#include "mtl/error.hpp"
#include "mtl/numerics/random.hpp"

namespace mtl::train {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view regime_name(Regime regime) {
  switch (regime) {
    case Regime::StlFullFt: return "STL-full-FT";
    case Regime::StlFreeze: return "STL-freeze";
    case Regime::MtlSixAux: return "MTL-six-aux";
    case Regime::MtlTwoAux: return "MTL-two-aux";
    case Regime::MtlSixFullFt: return "MTL-six-full-FT";
    case Regime::MtlSixFreeze: return "MTL-six-freeze";
    case Regime::MtlTwoFullFt: return "MTL-two-full-FT";
    case Regime::MtlTwoFreeze: return "MTL-two-freeze";
  }
  return "?";
}

std::vector<Regime> all_regimes() {
  return {Regime::StlFullFt,    Regime::StlFreeze,    Regime::MtlSixAux,    Regime::MtlTwoAux,
          Regime::MtlSixFullFt, Regime::MtlSixFreeze, Regime::MtlTwoFullFt, Regime::MtlTwoFreeze};
}

Regime parse_regime(std::string_view name) {
  for (Regime r : all_regimes()) {
    if (lower(regime_name(r)) == lower(name)) return r;
  }
  std::string valid;
  for (Regime r : all_regimes()) valid += (valid.empty() ? "" : ", ") + std::string(regime_name(r));
  throw ConfigError("unknown regime '" + std::string(name) + "'; valid regimes: " + valid);
}

RegimeSpec expand_regime(Regime regime, const TrainSettings& s) {
  auto stage = [&](std::vector<TaskId> active, bool encoder, std::vector<TaskId> heads, std::size_t index) {
    return StageSpec{std::move(active), encoder, std::move(heads), s.epochs, s.lr, s.batch_size,
                     mix_seed(s.seed, index)};
  };
  const std::vector<TaskId> hard{TaskId::Hard};

  RegimeSpec spec;
  spec.regime = regime;
  switch (regime) {
    case Regime::StlFullFt:
    case Regime::StlFreeze:
      spec.head_set = model::HeadSet::HardOnly;
      spec.stages.push_back(stage(hard, regime == Regime::StlFullFt, hard, 0));
      return spec;
    case Regime::MtlSixAux:
    case Regime::MtlSixFullFt:
    case Regime::MtlSixFreeze:
      spec.head_set = model::HeadSet::HardSix;
      break;
    case Regime::MtlTwoAux:
    case Regime::MtlTwoFullFt:
    case Regime::MtlTwoFreeze:
      spec.head_set = model::HeadSet::HardTwo;
      break;
  }
  const auto all = model::head_set_tasks(spec.head_set);
  const bool freeze = regime == Regime::MtlSixFreeze || regime == Regime::MtlTwoFreeze;
  const bool nested = regime != Regime::MtlSixAux && regime != Regime::MtlTwoAux;
  spec.stages.push_back(stage(all, !(freeze && s.freeze_stage1), all, 0));
  if (nested) spec.stages.push_back(stage(hard, !freeze, hard, 1));
  return spec;
}

RegimeSpec expand_regime(std::string_view name, const TrainSettings& settings) {
  return expand_regime(parse_regime(name), settings);
}

}  // namespace mtl::train
