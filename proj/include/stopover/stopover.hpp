#pragma once

#include "stopover/closed_model.hpp"
#include "stopover/diagnostics.hpp"
#include "stopover/errors.hpp"
#include "stopover/io.hpp"
#include "stopover/math.hpp"
#include "stopover/open_model.hpp"
#include "stopover/oracle.hpp"
#include "stopover/params.hpp"
#include "stopover/ppc.hpp"
#include "stopover/priors.hpp"
#include "stopover/random.hpp"
#include "stopover/sampler.hpp"
#include "stopover/study_data.hpp"
#include "stopover/trace.hpp"
