#ifndef FDAPOI_FDAPOI_HPP
#define FDAPOI_FDAPOI_HPP

#include "fdapoi/cli.hpp"
#include "fdapoi/csv.hpp"
#include "fdapoi/dataset.hpp"
#include "fdapoi/detection.hpp"
#include "fdapoi/errors.hpp"
#include "fdapoi/evaluation.hpp"
#include "fdapoi/fpca.hpp"
#include "fdapoi/grid.hpp"
#include "fdapoi/impact_model.hpp"
#include "fdapoi/parallel.hpp"
#include "fdapoi/process.hpp"
#include "fdapoi/quadrature.hpp"
#include "fdapoi/regression.hpp"
#include "fdapoi/report.hpp"
#include "fdapoi/rng.hpp"
#include "fdapoi/schema.hpp"
#include "fdapoi/simulate.hpp"

#endif  // FDAPOI_FDAPOI_HPP
