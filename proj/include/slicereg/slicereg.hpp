#pragma once

#include "slicereg/analysis/metrics.hpp"
#include "slicereg/analysis/neurons.hpp"
#include "slicereg/analysis/phantom.hpp"
#include "slicereg/analysis/phantom_profile.hpp"
#include "slicereg/analysis/transfer.hpp"
#include "slicereg/annotation.hpp"
#include "slicereg/annotation_io.hpp"
#include "slicereg/config.hpp"
#include "slicereg/damage.hpp"
#include "slicereg/edges.hpp"
#include "slicereg/error.hpp"
#include "slicereg/image_io.hpp"
#include "slicereg/parallel.hpp"
#include "slicereg/raster.hpp"
#include "slicereg/reg/register.hpp"
#include "slicereg/report.hpp"
#include "slicereg/slicer/mesh.hpp"
#include "slicereg/slicer/slicer.hpp"
