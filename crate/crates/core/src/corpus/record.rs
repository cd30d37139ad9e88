//! One social-media message in the documented JSONL schema.

use serde::{Deserialize, Serialize};

use super::ParseError;

/// A single message. Coordinates are a message attribute; the free-text
/// profile location is an author attribute carried on every record.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: String,
    /// UTC epoch seconds.
    pub created_at: i64,
    pub text: String,
    /// `(latitude, longitude)` in degrees when the message was geotagged.
    pub coordinates: Option<(f64, f64)>,
    pub profile_location: Option<String>,
}

/// Wire shape: `{"id", "user_id", "created_at", "text", "lat"?, "lon"?,
/// "profile_location"?}`. Unknown keys are ignored.
#[derive(Debug, Deserialize, Serialize)]
struct RawRecord {
    id: Option<String>,
    user_id: Option<String>,
    created_at: Option<i64>,
    text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile_location: Option<String>,
}

/// Parses one JSONL line into a [`TweetRecord`].
///
/// Coordinate validation happens here so downstream geo code can assume
/// in-range values: a record with only one of lat/lon, a non-finite
/// value, or an out-of-range degree is rejected as malformed.
pub fn parse_record(line: &str) -> Result<TweetRecord, ParseError> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| ParseError::MalformedRecord {
        reason: e.to_string(),
    })?;

    let tweet_id = require_nonempty(raw.id, "id")?;
    let user_id = require_nonempty(raw.user_id, "user_id")?;
    let text = raw
        .text
        .ok_or(ParseError::MissingRequiredField { field: "text" })?;
    let created_at = raw
        .created_at
        .ok_or(ParseError::MissingRequiredField { field: "created_at" })?;

    let coordinates = match (raw.lat, raw.lon) {
        (Some(lat), Some(lon)) => {
            if !lat.is_finite() || !lon.is_finite() {
                return Err(malformed("non-finite coordinate"));
            }
            if !(-90.0..=90.0).contains(&lat) {
                return Err(malformed(&format!("latitude {lat} out of [-90, 90]")));
            }
            if !(-180.0..=180.0).contains(&lon) {
                return Err(malformed(&format!("longitude {lon} out of [-180, 180]")));
            }
            Some((lat, lon))
        }
        (None, None) => None,
        _ => return Err(malformed("coordinate pair incomplete")),
    };

    Ok(TweetRecord {
        tweet_id,
        user_id,
        created_at,
        text,
        coordinates,
        profile_location: raw.profile_location.filter(|s| !s.is_empty()),
    })
}

/// Serializes a record back to one JSONL line (no trailing newline).
/// Inverse of [`parse_record`] on valid records.
pub fn serialize_record(rec: &TweetRecord) -> String {
    let raw = RawRecord {
        id: Some(rec.tweet_id.clone()),
        user_id: Some(rec.user_id.clone()),
        created_at: Some(rec.created_at),
        text: Some(rec.text.clone()),
        lat: rec.coordinates.map(|(lat, _)| lat),
        lon: rec.coordinates.map(|(_, lon)| lon),
        profile_location: rec.profile_location.clone(),
    };
    serde_json::to_string(&raw).expect("record serialization cannot fail")
}

fn require_nonempty(
    value: Option<String>,
    field: &'static str,
) -> Result<String, ParseError> {
    match value {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(ParseError::MissingRequiredField { field }),
    }
}

fn malformed(reason: &str) -> ParseError {
    ParseError::MalformedRecord {
        reason: reason.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coordinates_pass_through() {
        let rec = parse_record(
            r#"{"id":"t1","user_id":"u1","created_at":100,"text":"hi","lat":40.0,"lon":-75.1}"#,
        )
        .unwrap();
        assert_eq!(rec.coordinates, Some((40.0, -75.1)));
        assert_eq!(rec.profile_location, None);
    }

    #[test]
    fn out_of_range_latitude_is_malformed() {
        let err = parse_record(
            r#"{"id":"t1","user_id":"u1","created_at":100,"text":"hi","lat":95.0,"lon":0.0}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::MalformedRecord { .. }), "{err}");
    }

    #[test]
    fn missing_text_is_missing_field() {
        let err =
            parse_record(r#"{"id":"t1","user_id":"u1","created_at":100}"#).unwrap_err();
        assert!(
            matches!(err, ParseError::MissingRequiredField { field: "text" }),
            "{err}"
        );
    }

    #[test]
    fn lone_coordinate_is_malformed() {
        let err = parse_record(
            r#"{"id":"t1","user_id":"u1","created_at":100,"text":"hi","lat":40.0}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::MalformedRecord { .. }));
    }

    #[test]
    fn unknown_keys_ignored() {
        let rec = parse_record(
            r#"{"id":"t1","user_id":"u1","created_at":100,"text":"hi","retweets":3}"#,
        )
        .unwrap();
        assert_eq!(rec.tweet_id, "t1");
    }

    #[test]
    fn empty_id_rejected() {
        let err =
            parse_record(r#"{"id":"","user_id":"u1","created_at":100,"text":"hi"}"#)
                .unwrap_err();
        assert!(matches!(
            err,
            ParseError::MissingRequiredField { field: "id" }
        ));
    }

    #[test]
    fn garbage_line_is_malformed() {
        assert!(matches!(
            parse_record("not json").unwrap_err(),
            ParseError::MalformedRecord { .. }
        ));
    }

    proptest! {
        // parse ∘ serialize is identity on valid records.
        #[test]
        fn roundtrip(
            tweet_id in "[a-z0-9]{1,12}",
            user_id in "[a-z0-9]{1,12}",
            created_at in -1_000_000_000i64..4_000_000_000i64,
            text in ".{0,80}",
            coords in proptest::option::of((-90.0f64..=90.0, -180.0f64..=180.0)),
            profile in proptest::option::of("[A-Za-z, ]{1,24}"),
        ) {
            let rec = TweetRecord {
                tweet_id, user_id, created_at, text,
                coordinates: coords,
                profile_location: profile,
            };
            let back = parse_record(&serialize_record(&rec)).unwrap();
            prop_assert_eq!(back, rec);
        }
    }
}
