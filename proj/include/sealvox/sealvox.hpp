#pragma once

#include "sealvox/core/error.hpp"
#include "sealvox/core/parallel.hpp"
#include "sealvox/core/rng.hpp"
#include "sealvox/core/vec.hpp"
#include "sealvox/curation/sample_set.hpp"
#include "sealvox/curation/sampling.hpp"
#include "sealvox/curation/thin_shell.hpp"
#include "sealvox/extract/assemble.hpp"
#include "sealvox/extract/fidelity.hpp"
#include "sealvox/extract/marching_cubes.hpp"
#include "sealvox/extract/scalar_sdf.hpp"
#include "sealvox/extract/validate.hpp"
#include "sealvox/grid/grid_io.hpp"
#include "sealvox/grid/morphology.hpp"
#include "sealvox/grid/sparse_grid.hpp"
#include "sealvox/mesh/bvh.hpp"
#include "sealvox/mesh/mesh_io.hpp"
#include "sealvox/mesh/surface_sampling.hpp"
#include "sealvox/mesh/triangle_mesh.hpp"
#include "sealvox/pipeline/commands.hpp"
#include "sealvox/pipeline/config.hpp"
#include "sealvox/pipeline/pipeline.hpp"
#include "sealvox/pipeline/report.hpp"
#include "sealvox/sign/resolve.hpp"
#include "sealvox/voxelize/udf.hpp"
#include "sealvox/voxelize/voxelize.hpp"
