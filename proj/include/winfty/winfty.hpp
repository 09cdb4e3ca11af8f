#pragma once

#include <winfty/rational.hpp>
#include <winfty/measures.hpp>
#include <winfty/cost.hpp>
#include <winfty/cells.hpp>
#include <winfty/graph.hpp>
#include <winfty/solver.hpp>
#include <winfty/reductions.hpp>
#include <winfty/io.hpp>
