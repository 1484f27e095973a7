#ifndef PROCUR_PROCUR_HPP
#define PROCUR_PROCUR_HPP

#include "procur/config_json.hpp"
#include "procur/distributions.hpp"
#include "procur/market.hpp"
#include "procur/mechanisms.hpp"
#include "procur/payments.hpp"
#include "procur/quadrature.hpp"
#include "procur/report_io.hpp"
#include "procur/rng.hpp"
#include "procur/simulate.hpp"
#include "procur/solver.hpp"

#endif
