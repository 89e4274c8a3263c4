#pragma once

// Importing an external fracture corpus (Breaking-Bad style).
//
// Not implemented here; an importer only has to produce a Dataset and call
// save_dataset. Field mapping:
//
//   source                          Dataset
//   ------------------------------  ----------------------------------------
//   <category>/<object>/<fracture>  ShapeRecord::shape_id ("<object>_<fracture>")
//   <category>                      ShapeRecord::category
//   piece_<k>.obj (world frame)     sample n_pc surface points, then
//                                   canonicalize: c = centroid, random R,
//                                   part = R·(x - c) on the 2^-20 grid,
//                                   gt_pose = (R^-1, c)
//   adjacent piece pairs            Contact, closest point pair expressed in
//                                   each part's canonical frame
//   official train/val/test lists   Dataset::splits
//
// Shapes with more than 20 pieces are skipped, matching the model bound.
