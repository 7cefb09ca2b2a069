//! Flow topology: zero contours, stagnation points, winding numbers,
//! field lines and the pinch-point coincidence check.

mod contour;
mod pinch;
mod stagnation;
mod streamline;
mod winding;

pub use contour::{zero_contours, zero_contours_tagged, ContourSet, Polyline};
pub use pinch::{contour_intersections, pinch_point_report, PinchPair, PinchReport};
pub use stagnation::{
    stagnation_points, stagnation_points_with, StagnationOptions, StagnationPoint,
};
pub use streamline::{streamline, Streamline, StreamlineOptions, StreamlineStop};
pub use winding::{
    poincare_index, winding_number, LoopPath, LOOP_STAGNATION_RELATIVE, MAX_LOOP_SAMPLES,
};
