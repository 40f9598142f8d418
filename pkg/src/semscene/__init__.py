"""Semantic RGB-D scene understanding: voting, tracking, and cloud merging.

The package turns per-frame depth, class labels, masks, and detections into
a persistent labeled scene model: masks are classed by majority voting,
subjects are tracked across segmenter resets with pointer re-identification,
and per-object point clouds merge through label-gated overlap scoring with
two-stage voxel downsampling. A synthetic generator and metrics close the
loop for testing and benchmarking.
"""

from .geometry import (CameraIntrinsics, DepthImage, Pose, VoxelParams, as_points,
                       backproject, nearest_neighbor, transform, voxel_downsample)
from .semvote import (LabelImage, MaskSet, SemanticMask, SemanticMaskSet, combine,
                      majority_label, masks_from_instances, overlap_resolve)
from .tracker import (Assignment, Detection, PcaProjector, TrackState, TrackedObject,
                      assign_hungarian, bbox_cost, project_pointer, reidentify, step)
from .fusion import (CorrespondenceMap, FrameStats, FusionParams, SceneModel,
                     SegmentedCloud, count_distance_computations, merge_frame,
                     merge_human, mutual_correspondences, overlap)
from .evalmetrics import (CloudError, SegMetrics, cloud_error, fit_pca,
                          runtime_report, seg_metrics, tracking_score)
from .synthdata import (Actor, Box, NoiseModel, Plane, ScenePrimitive, Sphere,
                        SubjectScript, TrackingScenario, apply_noise,
                        gen_tracking_sequence, generate_dataset, look_at,
                        orbit_path, render_depth, sample_surfaces,
                        surface_distances)
from .pipeline import FrameRecord, PipelineConfig, ingest, run_pipeline
from .usd_export import export_usda

__version__ = "0.1.0"
