#pragma once

#include "memlab/model.hpp"

#include <string>

namespace memlab {

/// Binary model file: a header describing the encoder and projector layout
/// followed by every parameter block in storage order. Loading reproduces the
/// model bit for bit.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace memlab
