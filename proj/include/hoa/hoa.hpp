#pragma once

#include "hoa/accel.hpp"
#include "hoa/audit.hpp"
#include "hoa/flow.hpp"
#include "hoa/minimize.hpp"
#include "hoa/model.hpp"
#include "hoa/ode.hpp"
#include "hoa/oracle.hpp"
#include "hoa/problems.hpp"
#include "hoa/rates.hpp"
#include "hoa/stepsize.hpp"
#include "hoa/types.hpp"
