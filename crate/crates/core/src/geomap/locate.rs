//! Point and profile-text county resolution.

use super::gazetteer::{normalize_place, CountyShape, Gazetteer};

/// How a record earned its county.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentSource {
    Coordinates,
    ProfileText,
}

/// A tweet record resolved to a county.
#[derive(Debug, Clone)]
pub struct MappedRecord {
    pub fips: String,
    pub source: AssignmentSource,
}

/// True when `p` lies on the closed segment `a`..`b`.
fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    if cross.abs() > 1e-12 {
        return false;
    }
    let dot = (p.0 - a.0) * (b.0 - a.0) + (p.1 - a.1) * (b.1 - a.1);
    let len2 = (b.0 - a.0) * (b.0 - a.0) + (b.1 - a.1) * (b.1 - a.1);
    dot >= -1e-12 && dot <= len2 + 1e-12
}

/// Even-odd test with explicit boundary detection. Boundary points
/// count as inside so the caller's tie-break sees every adjacent shape.
fn shape_contains(shape: &CountyShape, lat: f64, lon: f64) -> bool {
    let p = (lat, lon);
    let mut inside = false;
    for ring in &shape.rings {
        let pts = &ring.points;
        let n = pts.len();
        for i in 0..n {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            if on_segment(p, a, b) {
                return true;
            }
            // Ray cast toward +lon; half-open vertex rule avoids double counts.
            if (a.0 > lat) != (b.0 > lat) {
                let t = (lat - a.0) / (b.0 - a.0);
                let x = a.1 + t * (b.1 - a.1);
                if x > lon {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Resolves a coordinate pair to a county FIPS, or `None` when no
/// loaded polygon contains it. Ties on shared boundaries go to the
/// lexicographically smallest FIPS.
pub fn map_coordinates(lat: f64, lon: f64, g: &Gazetteer) -> Option<String> {
    let cell = (lat.floor() as i32, lon.floor() as i32);
    let candidates = g.cell_index.get(&cell)?;
    let mut best: Option<&str> = None;
    for &idx in candidates {
        let shape = &g.shapes[idx];
        let (lat0, lat1, lon0, lon1) = shape.bbox;
        if lat < lat0 || lat > lat1 || lon < lon0 || lon > lon1 {
            continue;
        }
        if shape_contains(shape, lat, lon) {
            best = match best {
                Some(cur) if cur <= shape.fips.as_str() => Some(cur),
                _ => Some(&shape.fips),
            };
        }
    }
    best.map(str::to_string)
}

/// Cascading profile-text rules, first match wins:
///   1. "city, ST" with a known (city, state) pair
///   2. "city, state name"
///   3. "x county, ST"
/// A bare city name with no state token never maps.
pub fn map_profile_location(text: &str, g: &Gazetteer) -> Option<String> {
    let norm = normalize_place(text);
    let (place, state_raw) = norm.rsplit_once(',')?;
    let place = place.trim();
    let state_token = state_raw.trim();
    if place.is_empty() || state_token.is_empty() {
        return None;
    }
    let state = g.state_abbrev(state_token)?;
    if let Some(fips) = g.city_fips(place, state) {
        return Some(fips.to_string());
    }
    if let Some(county) = place.strip_suffix(" county") {
        if let Some(fips) = g.county_fips(county, state) {
            return Some(fips.to_string());
        }
    }
    None
}

/// Maps one record, coordinates first, profile text as fallback.
pub fn map_record(
    coordinates: Option<(f64, f64)>,
    profile_location: Option<&str>,
    g: &Gazetteer,
) -> Option<MappedRecord> {
    if let Some((lat, lon)) = coordinates {
        if let Some(fips) = map_coordinates(lat, lon, g) {
            return Some(MappedRecord {
                fips,
                source: AssignmentSource::Coordinates,
            });
        }
    }
    let text = profile_location?;
    map_profile_location(text, g).map(|fips| MappedRecord {
        fips,
        source: AssignmentSource::ProfileText,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomap::gazetteer::{load_gazetteer, load_polygons};
    use std::io::Cursor;

    fn unit_squares() -> Gazetteer {
        let mut g = load_gazetteer(Cursor::new("philadelphia\tPA\t42101\n")).unwrap();
        // 99001 spans lat 0..1, 99002 shares the lat=1 edge above it.
        let polys = "99001\t0\t0,0;1,0;1,1;0,1\n99002\t0\t1,0;2,0;2,1;1,1\n";
        load_polygons(&mut g, Cursor::new(polys)).unwrap();
        g
    }

    #[test]
    fn interior_point_maps() {
        let g = unit_squares();
        assert_eq!(map_coordinates(0.5, 0.5, &g).as_deref(), Some("99001"));
        assert_eq!(map_coordinates(1.5, 0.5, &g).as_deref(), Some("99002"));
    }

    #[test]
    fn outside_point_is_none() {
        let g = unit_squares();
        assert_eq!(map_coordinates(5.0, 5.0, &g), None);
        assert_eq!(map_coordinates(-0.5, 0.5, &g), None);
    }

    #[test]
    fn shared_edge_goes_to_smaller_fips() {
        let g = unit_squares();
        assert_eq!(map_coordinates(1.0, 0.5, &g).as_deref(), Some("99001"));
    }

    #[test]
    fn corner_point_goes_to_smaller_fips() {
        let g = unit_squares();
        assert_eq!(map_coordinates(1.0, 0.0, &g).as_deref(), Some("99001"));
    }

    #[test]
    fn profile_city_state_abbrev() {
        let g = unit_squares();
        assert_eq!(
            map_profile_location("Philadelphia, PA", &g).as_deref(),
            Some("42101")
        );
    }

    #[test]
    fn profile_city_state_name() {
        let g = unit_squares();
        assert_eq!(
            map_profile_location("Philadelphia, Pennsylvania", &g).as_deref(),
            Some("42101")
        );
    }

    #[test]
    fn profile_county_pattern() {
        let g = load_gazetteer(Cursor::new("philadelphia county\tPA\t42101\n")).unwrap();
        assert_eq!(
            map_profile_location("Philadelphia County, PA", &g).as_deref(),
            Some("42101")
        );
    }

    #[test]
    fn bare_city_never_maps() {
        let g = unit_squares();
        assert_eq!(map_profile_location("philadelphia", &g), None);
        assert_eq!(map_profile_location("Philadelphia", &g), None);
    }

    #[test]
    fn unknown_string_is_none() {
        let g = unit_squares();
        assert_eq!(map_profile_location("Mars", &g), None);
        assert_eq!(map_profile_location("Philadelphia, ZZ", &g), None);
        assert_eq!(map_profile_location("", &g), None);
        assert_eq!(map_profile_location(",", &g), None);
    }

    #[test]
    fn normalization_applies() {
        let g = unit_squares();
        assert_eq!(
            map_profile_location("  philadelphia ,  PA!! ", &g).as_deref(),
            Some("42101")
        );
    }

    #[test]
    fn record_prefers_coordinates() {
        let g = unit_squares();
        let m = map_record(Some((0.5, 0.5)), Some("Philadelphia, PA"), &g).unwrap();
        assert_eq!(m.fips, "99001");
        assert_eq!(m.source, AssignmentSource::Coordinates);
    }

    #[test]
    fn record_falls_back_to_profile() {
        let g = unit_squares();
        let m = map_record(Some((50.0, 50.0)), Some("Philadelphia, PA"), &g).unwrap();
        assert_eq!(m.fips, "42101");
        assert_eq!(m.source, AssignmentSource::ProfileText);
        let m2 = map_record(None, Some("Philadelphia, PA"), &g).unwrap();
        assert_eq!(m2.fips, "42101");
    }

    #[test]
    fn record_with_no_evidence_is_none() {
        let g = unit_squares();
        assert!(map_record(None, None, &g).is_none());
        assert!(map_record(None, Some("nowhere"), &g).is_none());
    }
}
