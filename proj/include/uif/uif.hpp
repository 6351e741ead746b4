#pragma once

#include "uif/canny.hpp"
#include "uif/correlation.hpp"
#include "uif/csv.hpp"
#include "uif/error.hpp"
#include "uif/eval.hpp"
#include "uif/features.hpp"
#include "uif/image.hpp"
#include "uif/naturalness.hpp"
#include "uif/sharpness.hpp"
#include "uif/structure.hpp"
#include "uif/subjective.hpp"
#include "uif/svr.hpp"
