#pragma once

#include "lazsl/alignment.hpp"
#include "lazsl/bundle.hpp"
#include "lazsl/core.hpp"
#include "lazsl/cropplan.hpp"
#include "lazsl/error.hpp"
#include "lazsl/eval.hpp"
#include "lazsl/exact_ot.hpp"
#include "lazsl/ot_check.hpp"
#include "lazsl/rng.hpp"
#include "lazsl/sinkhorn.hpp"
#include "lazsl/synth.hpp"
