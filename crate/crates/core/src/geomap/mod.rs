//! County resolution: gazetteer lookups, point-in-polygon mapping, and
//! per-user home-county assignment.

mod assign;
mod gazetteer;
mod locate;

pub use assign::{assign_user_county, UserAssignments, UserCountyAssignment};
pub use gazetteer::{load_gazetteer, load_polygons, Gazetteer};
pub use locate::{map_coordinates, map_profile_location, map_record, AssignmentSource, MappedRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("gazetteer schema error at line {line}: {reason}")]
    SchemaError { line: usize, reason: String },
    #[error("conflicting FIPS for {key}: {existing} vs {incoming}")]
    DuplicateConflict {
        key: String,
        existing: String,
        incoming: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
