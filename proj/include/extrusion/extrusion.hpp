#ifndef EXTRUSION_EXTRUSION_HPP
#define EXTRUSION_EXTRUSION_HPP

#include "extrusion/error.hpp"
#include "extrusion/model.hpp"
#include "extrusion/fields.hpp"
#include "extrusion/characteristics.hpp"
#include "extrusion/wellposed.hpp"
#include "extrusion/lintransport.hpp"
#include "extrusion/oracle.hpp"
#include "extrusion/control.hpp"
#include "extrusion/csv.hpp"
#include "extrusion/scenario.hpp"

#endif  // EXTRUSION_EXTRUSION_HPP
