#ifndef LIS_LIS_HPP
#define LIS_LIS_HPP

#include "lis/types.hpp"
#include "lis/quadrature.hpp"
#include "lis/geometry.hpp"
#include "lis/mesh_io.hpp"
#include "lis/kernel.hpp"
#include "lis/eigen_dof.hpp"
#include "lis/spectrum.hpp"
#include "lis/channel.hpp"
#include "lis/io.hpp"

#endif
