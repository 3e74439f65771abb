#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flexctl/config.hpp"
#include "flexctl/flex_control.hpp"
#include "flexctl/modal_model.hpp"
#include "flexctl/observer.hpp"
#include "flexctl/rigid_body.hpp"
#include "flexctl/scheduling.hpp"

namespace flexctl {

// Everything derived from the mechanical model alone.
struct PlantStack {
  ModalForm modal;
  DecoupledPlant plant;
  TruncatedPlant truncated;
  DiscreteModel observer_model;
  MatrixXd axis_from_modal;  // n_rb x n_rb, physical axis displacement per unit q_RB
  MatrixXd modal_from_axis;
  double ts = 0.0;

  Index n_rb() const { return plant.n_rb(); }
};

PlantStack build_plant(const Config& cfg);

// Hash of the configuration with the run-only settings ([sim], [analysis]
// and noise.seed) at their defaults; stored in the design file.
std::uint64_t design_config_hash(const Config& cfg);

// Controller artifacts; this is what the design file stores.
struct ControllerDesign {
  std::uint64_t config_hash = 0;
  double ts = 0.0;
  ObserverBank bank;
  WeightingScheme weights;
  FlexGains gains;
  std::vector<BandPassDesign> bandpass;  // one per controlled mode
  std::vector<PidAxisDesign> pid;        // one per rigid-body axis
  FeedforwardDesign feedforward;
  std::vector<std::string> warnings;

  // Offsets of the controlled modes' position states in the observer state.
  std::vector<Index> controlled_offsets(const PlantStack& stack) const;
};

// Observer bank, constraint-only weights, flexible-mode gains, band-pass
// filters and the rigid-body controllers.
ControllerDesign design_controllers(const Config& cfg, const PlantStack& stack);

// Closed-loop record used for the weight regression.
struct TrainingTrace {
  double ts = 0.0;
  MatrixXd p;  // 2 x N scheduling points
  MatrixXd u;  // n_rb x N decoupled inputs u~(k)
  MatrixXd y;  // n_rb x N decoupled outputs y_RB(k)
  MatrixXd x;  // states x N full-model grouped modal states

  Index samples() const { return p.cols(); }
};

// Raster over the workspace rows of the observer grid, flex loop off. The
// noise amplitudes come from the config, the seed is kTrainingSeed so the
// design does not depend on the run seed.
inline constexpr std::uint64_t kTrainingSeed = 0x7261737465720001ULL;
TrainingTrace generate_training(const Config& cfg, const PlantStack& stack, const ControllerDesign& design);

// Steps every local observer over the trace and solves the constrained fit
// on the retained flexible-mode states. Raises InfeasibleConstraints when
// strict is set and the constraints cannot be met.
WeightingScheme fit_weights(const PlantStack& stack, const ObserverBank& bank, const SpatialBasis& basis,
                            const TrainingTrace& trace, bool strict);

// design_controllers followed by training and fitting.
ControllerDesign run_design(const Config& cfg, const PlantStack& stack);

}  // namespace flexctl
