#pragma once

// Umbrella header.
#include "mlpath/fixed_points.hpp"
#include "mlpath/io.hpp"
#include "mlpath/lagrangian.hpp"
#include "mlpath/optimizer.hpp"
#include "mlpath/parallel.hpp"
#include "mlpath/path.hpp"
#include "mlpath/ring.hpp"
#include "mlpath/sde_system.hpp"
#include "mlpath/simulate.hpp"
#include "mlpath/systems.hpp"
#include "mlpath/trajectory.hpp"
#include "mlpath/transition_time.hpp"
#include "mlpath/types.hpp"
