//! Gazetteer loading and the place-name tables behind the profile rules.
//!
//! The gazetteer TSV is `name \t state_abbrev \t fips`. Rows whose name
//! ends in " county" populate the county table (suffix stripped);
//! everything else is a city row. State names and abbreviations are a
//! fixed federal table and ship built in.
//!
//! The companion polygon file is `fips \t ring_index \t lat,lon;...`
//! with one ring per line; multiple rings per FIPS combine under the
//! even-odd rule, so holes work.

use std::collections::HashMap;
use std::io::BufRead;

use super::GeoError;

/// `(name, abbrev, state FIPS prefix)` for the 50 states, DC, and PR.
const STATES: &[(&str, &str, &str)] = &[
    ("alabama", "AL", "01"),
    ("alaska", "AK", "02"),
    ("arizona", "AZ", "04"),
    ("arkansas", "AR", "05"),
    ("california", "CA", "06"),
    ("colorado", "CO", "08"),
    ("connecticut", "CT", "09"),
    ("delaware", "DE", "10"),
    ("district of columbia", "DC", "11"),
    ("florida", "FL", "12"),
    ("georgia", "GA", "13"),
    ("hawaii", "HI", "15"),
    ("idaho", "ID", "16"),
    ("illinois", "IL", "17"),
    ("indiana", "IN", "18"),
    ("iowa", "IA", "19"),
    ("kansas", "KS", "20"),
    ("kentucky", "KY", "21"),
    ("louisiana", "LA", "22"),
    ("maine", "ME", "23"),
    ("maryland", "MD", "24"),
    ("massachusetts", "MA", "25"),
    ("michigan", "MI", "26"),
    ("minnesota", "MN", "27"),
    ("mississippi", "MS", "28"),
    ("missouri", "MO", "29"),
    ("montana", "MT", "30"),
    ("nebraska", "NE", "31"),
    ("nevada", "NV", "32"),
    ("new hampshire", "NH", "33"),
    ("new jersey", "NJ", "34"),
    ("new mexico", "NM", "35"),
    ("new york", "NY", "36"),
    ("north carolina", "NC", "37"),
    ("north dakota", "ND", "38"),
    ("ohio", "OH", "39"),
    ("oklahoma", "OK", "40"),
    ("oregon", "OR", "41"),
    ("pennsylvania", "PA", "42"),
    ("puerto rico", "PR", "72"),
    ("rhode island", "RI", "44"),
    ("south carolina", "SC", "45"),
    ("south dakota", "SD", "46"),
    ("tennessee", "TN", "47"),
    ("texas", "TX", "48"),
    ("utah", "UT", "49"),
    ("vermont", "VT", "50"),
    ("virginia", "VA", "51"),
    ("washington", "WA", "53"),
    ("west virginia", "WV", "54"),
    ("wisconsin", "WI", "55"),
    ("wyoming", "WY", "56"),
];

#[derive(Debug, Clone)]
pub(super) struct Ring {
    /// `(lat, lon)` vertices without a duplicated closing point.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub(super) struct CountyShape {
    pub fips: String,
    pub rings: Vec<Ring>,
    pub bbox: (f64, f64, f64, f64), // min_lat, max_lat, min_lon, max_lon
}

/// Immutable place tables, shareable across workers after load.
#[derive(Debug, Default)]
pub struct Gazetteer {
    /// (normalized city, state abbrev) → FIPS.
    city_entries: HashMap<(String, String), String>,
    /// (normalized county name sans " county", state abbrev) → FIPS.
    county_entries: HashMap<(String, String), String>,
    /// normalized state name or abbrev → (canonical abbrev, FIPS prefix).
    state_entries: HashMap<String, (String, String)>,
    pub(super) shapes: Vec<CountyShape>,
    /// 1° grid cell → indices into `shapes`, for point queries.
    pub(super) cell_index: HashMap<(i32, i32), Vec<usize>>,
}

impl Gazetteer {
    pub fn new() -> Self {
        let mut g = Gazetteer::default();
        for (name, abbrev, prefix) in STATES {
            let value = ((*abbrev).to_string(), (*prefix).to_string());
            g.state_entries.insert((*name).to_string(), value.clone());
            g.state_entries
                .insert(abbrev.to_ascii_lowercase(), value);
        }
        g
    }

    pub fn city_fips(&self, city: &str, state_abbrev: &str) -> Option<&str> {
        self.city_entries
            .get(&(city.to_string(), state_abbrev.to_string()))
            .map(String::as_str)
    }

    pub fn county_fips(&self, county: &str, state_abbrev: &str) -> Option<&str> {
        self.county_entries
            .get(&(county.to_string(), state_abbrev.to_string()))
            .map(String::as_str)
    }

    /// Resolves a normalized state token ("pa", "pennsylvania") to its
    /// canonical abbreviation.
    pub fn state_abbrev(&self, token: &str) -> Option<&str> {
        self.state_entries.get(token).map(|(a, _)| a.as_str())
    }

    pub fn n_cities(&self) -> usize {
        self.city_entries.len()
    }

    pub fn n_counties(&self) -> usize {
        self.county_entries.len()
    }

    pub fn n_shapes(&self) -> usize {
        self.shapes.len()
    }

    /// All (city, state, fips) rows, sorted. Used by fixtures and tests.
    pub fn city_rows(&self) -> Vec<(String, String, String)> {
        let mut rows: Vec<_> = self
            .city_entries
            .iter()
            .map(|((c, s), f)| (c.clone(), s.clone(), f.clone()))
            .collect();
        rows.sort();
        rows
    }

    fn insert_entry(
        &mut self,
        name: &str,
        state: &str,
        fips: String,
        line: usize,
    ) -> Result<(), GeoError> {
        let (table, key_name) = match name.strip_suffix(" county") {
            Some(county) => (&mut self.county_entries, county.to_string()),
            None => (&mut self.city_entries, name.to_string()),
        };
        let key = (key_name, state.to_string());
        if let Some(existing) = table.get(&key) {
            if *existing != fips {
                return Err(GeoError::DuplicateConflict {
                    key: format!("({}, {}) at line {line}", key.0, key.1),
                    existing: existing.clone(),
                    incoming: fips,
                });
            }
            return Ok(());
        }
        table.insert(key, fips);
        Ok(())
    }
}

/// Lowercase, trim, collapse whitespace runs, strip trailing punctuation.
pub(super) fn normalize_place(text: &str) -> String {
    let lower = text.to_lowercase();
    let collapsed: Vec<&str> = lower.split_whitespace().collect();
    collapsed
        .join(" ")
        .trim_end_matches(|c: char| c.is_ascii_punctuation())
        .trim_end()
        .to_string()
}

/// Loads city/county rows from a TSV reader into a fresh gazetteer.
/// Duplicate keys with the same FIPS are idempotent; conflicting FIPS
/// is an error. An empty source yields a valid empty gazetteer.
pub fn load_gazetteer<R: BufRead>(reader: R) -> Result<Gazetteer, GeoError> {
    let mut g = Gazetteer::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (name, state, fips) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(s), Some(f)) => (n, s, f),
            _ => {
                return Err(GeoError::SchemaError {
                    line: lineno,
                    reason: "expected `name\\tstate\\tfips`".to_string(),
                })
            }
        };
        let fips = fips.trim();
        if fips.len() != 5 || !fips.bytes().all(|b| b.is_ascii_digit()) {
            return Err(GeoError::SchemaError {
                line: lineno,
                reason: format!("fips `{fips}` is not a 5-digit code"),
            });
        }
        let state = state.trim().to_ascii_uppercase();
        g.insert_entry(&normalize_place(name), &state, fips.to_string(), lineno)?;
    }
    Ok(g)
}

/// Loads the companion polygon file into an existing gazetteer and
/// builds the grid index.
pub fn load_polygons<R: BufRead>(g: &mut Gazetteer, reader: R) -> Result<(), GeoError> {
    let mut rings_by_fips: HashMap<String, Vec<(usize, Ring)>> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (fips, ring_idx, coords) = match (parts.next(), parts.next(), parts.next()) {
            (Some(f), Some(r), Some(c)) => (f, r, c),
            _ => {
                return Err(GeoError::SchemaError {
                    line: lineno,
                    reason: "expected `fips\\tring_index\\tcoords`".to_string(),
                })
            }
        };
        let ring_idx: usize = ring_idx.trim().parse().map_err(|_| GeoError::SchemaError {
            line: lineno,
            reason: "ring_index is not an integer".to_string(),
        })?;
        let mut points = Vec::new();
        for pair in coords.trim().split(';').filter(|p| !p.is_empty()) {
            let (lat, lon) = pair.split_once(',').ok_or_else(|| GeoError::SchemaError {
                line: lineno,
                reason: format!("bad coordinate pair `{pair}`"),
            })?;
            let lat: f64 = lat.trim().parse().map_err(|_| GeoError::SchemaError {
                line: lineno,
                reason: format!("bad latitude `{lat}`"),
            })?;
            let lon: f64 = lon.trim().parse().map_err(|_| GeoError::SchemaError {
                line: lineno,
                reason: format!("bad longitude `{lon}`"),
            })?;
            points.push((lat, lon));
        }
        // Accept closed input rings; store open.
        if points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 3 {
            return Err(GeoError::SchemaError {
                line: lineno,
                reason: "ring needs at least 3 distinct points".to_string(),
            });
        }
        rings_by_fips
            .entry(fips.trim().to_string())
            .or_default()
            .push((ring_idx, Ring { points }));
    }

    let mut fips_list: Vec<String> = rings_by_fips.keys().cloned().collect();
    fips_list.sort();
    for fips in fips_list {
        let mut rings = rings_by_fips.remove(&fips).unwrap();
        rings.sort_by_key(|(i, _)| *i);
        let rings: Vec<Ring> = rings.into_iter().map(|(_, r)| r).collect();
        let mut bbox = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for ring in &rings {
            for (lat, lon) in &ring.points {
                bbox.0 = bbox.0.min(*lat);
                bbox.1 = bbox.1.max(*lat);
                bbox.2 = bbox.2.min(*lon);
                bbox.3 = bbox.3.max(*lon);
            }
        }
        g.shapes.push(CountyShape { fips, rings, bbox });
    }

    g.cell_index.clear();
    for (i, shape) in g.shapes.iter().enumerate() {
        let (lat0, lat1, lon0, lon1) = shape.bbox;
        for lat in (lat0.floor() as i32)..=(lat1.floor() as i32) {
            for lon in (lon0.floor() as i32)..=(lon1.floor() as i32) {
                g.cell_index.entry((lat, lon)).or_default().push(i);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn city_row_lookup() {
        let g = load_gazetteer(Cursor::new("philadelphia\tPA\t42101\n")).unwrap();
        assert_eq!(g.city_fips("philadelphia", "PA"), Some("42101"));
        assert_eq!(g.city_fips("philadelphia", "NY"), None);
    }

    #[test]
    fn conflicting_duplicate_rejected() {
        let data = "springfield\tIL\t17167\nspringfield\tIL\t17001\n";
        let err = load_gazetteer(Cursor::new(data)).unwrap_err();
        assert!(matches!(err, GeoError::DuplicateConflict { .. }), "{err}");
    }

    #[test]
    fn identical_duplicate_is_idempotent() {
        let data = "springfield\tIL\t17167\nspringfield\tIL\t17167\n";
        let g = load_gazetteer(Cursor::new(data)).unwrap();
        assert_eq!(g.n_cities(), 1);
    }

    #[test]
    fn empty_file_is_valid_and_empty() {
        let g = load_gazetteer(Cursor::new("")).unwrap();
        assert_eq!(g.n_cities(), 0);
        assert_eq!(g.n_counties(), 0);
    }

    #[test]
    fn county_rows_split_off() {
        let data = "philadelphia county\tPA\t42101\nphiladelphia\tPA\t42101\n";
        let g = load_gazetteer(Cursor::new(data)).unwrap();
        assert_eq!(g.county_fips("philadelphia", "PA"), Some("42101"));
        assert_eq!(g.n_cities(), 1);
        assert_eq!(g.n_counties(), 1);
    }

    #[test]
    fn bad_fips_is_schema_error() {
        let err = load_gazetteer(Cursor::new("x\tPA\t4210\n")).unwrap_err();
        assert!(matches!(err, GeoError::SchemaError { line: 1, .. }));
    }

    #[test]
    fn state_table_resolves_names_and_abbrevs() {
        let g = Gazetteer::new();
        assert_eq!(g.state_abbrev("pennsylvania"), Some("PA"));
        assert_eq!(g.state_abbrev("pa"), Some("PA"));
        assert_eq!(g.state_abbrev("narnia"), None);
    }

    #[test]
    fn normalize_collapses_and_strips() {
        assert_eq!(normalize_place("  Philadelphia,   PA. "), "philadelphia, pa");
        assert_eq!(normalize_place("MARS!!"), "mars");
    }

    #[test]
    fn polygon_rings_close_and_index() {
        let mut g = Gazetteer::new();
        let poly = "99001\t0\t0,0;0,1;1,1;1,0;0,0\n";
        load_polygons(&mut g, Cursor::new(poly)).unwrap();
        assert_eq!(g.n_shapes(), 1);
        assert_eq!(g.shapes[0].rings[0].points.len(), 4);
        assert!(g.cell_index.contains_key(&(0, 0)));
    }
}
