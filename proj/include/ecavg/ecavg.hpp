#pragma once

#include "ecavg/arith.hpp"
#include "ecavg/checkpoint.hpp"
#include "ecavg/constants.hpp"
#include "ecavg/ec.hpp"
#include "ecavg/family.hpp"
#include "ecavg/numtheory.hpp"
#include "ecavg/version.hpp"
