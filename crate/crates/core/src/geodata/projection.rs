//! Spherical web-mercator forward and inverse transforms.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Sphere radius of the web-mercator definition, in meters.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Latitude band outside which the projection is rejected.
pub const MAX_LATITUDE: f64 = 85.06;

pub fn project_to_metric(lon: f64, lat: f64) -> Result<(f64, f64)> {
    if !lon.is_finite() || !lat.is_finite() || lat.abs() >= MAX_LATITUDE || lon.abs() > 180.0 {
        return Err(Error::CoordinateRange { lon, lat });
    }
    let x = EARTH_RADIUS_M * lon.to_radians();
    let y = EARTH_RADIUS_M * lat.to_radians().sin().atanh();
    Ok((x, y))
}

/// Analytic inverse of [`project_to_metric`].
pub fn unproject(x: f64, y: f64) -> (f64, f64) {
    let lon = (x / EARTH_RADIUS_M).to_degrees();
    let lat = (2.0 * (y / EARTH_RADIUS_M).exp().atan() - FRAC_PI_2).to_degrees();
    (lon, lat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn origin_maps_to_origin() {
        assert_eq!(project_to_metric(0.0, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn antimeridian_on_equator() {
        let (x, y) = project_to_metric(180.0, 0.0).unwrap();
        assert!((x - PI * EARTH_RADIUS_M).abs() < 1e-6);
        assert_eq!(y, 0.0);
    }

    #[test]
    fn nanjing_matches_closed_form() {
        let (lon, lat) = (118.78_f64, 32.06_f64);
        let expected_x = EARTH_RADIUS_M * lon * PI / 180.0;
        let expected_y = EARTH_RADIUS_M * (PI / 4.0 + lat * PI / 360.0).tan().ln();
        let (x, y) = project_to_metric(lon, lat).unwrap();
        assert!((x - expected_x).abs() < 1e-6, "{x} vs {expected_x}");
        assert!((y - expected_y).abs() < 1e-6, "{y} vs {expected_y}");
        // values from an independent double-precision evaluation
        assert!((x - 13_222_529.116_425).abs() < 1e-3);
        assert!((y - 3_771_189.138_929).abs() < 1e-3);
    }

    #[test]
    fn rejects_polar_latitudes() {
        assert!(matches!(
            project_to_metric(10.0, 85.1),
            Err(Error::CoordinateRange { .. })
        ));
        assert!(project_to_metric(10.0, -86.0).is_err());
        assert!(project_to_metric(f64::NAN, 0.0).is_err());
        assert!(project_to_metric(181.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_recovers_degrees(lon in -180.0f64..180.0, lat in -85.0f64..85.0) {
            let (x, y) = project_to_metric(lon, lat).unwrap();
            let (lon2, lat2) = unproject(x, y);
            prop_assert!((lon - lon2).abs() < 1e-9);
            prop_assert!((lat - lat2).abs() < 1e-9);
        }
    }
}
