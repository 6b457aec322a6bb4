//! Deterministic synthetic fixture: a small pair of energy/weather CSVs in
//! the documented input schema, with gaps, blank cells, and one duplicated
//! timestamp so the whole pipeline gets exercised. The shipped files under
//! `fixtures/` are exactly the output of [`write_fixture_csvs`] with the
//! default config; a test keeps them in sync.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Timelike, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const CITIES: [&str; 5] = ["Barcelona", "Bilbao", "Madrid", "Sevilla", "Valencia"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_hours: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_hours: 500,
            seed: 7,
        }
    }
}

struct HourRecord {
    ts: DateTime<Utc>,
    nuclear: f64,
    wind: f64,
    solar: f64,
    fossil: f64,
    load: f64,
    price: f64,
    // per-city weather: temp, humidity, rain_3h, wind_speed
    weather: [[f64; 4]; 5],
}

fn simulate(cfg: &SynthConfig) -> Vec<HourRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let start = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    let tau = std::f64::consts::TAU;

    let mut out = Vec::with_capacity(cfg.n_hours);
    for t in 0..cfg.n_hours {
        let ts = start + Duration::hours(t as i64);
        let hour = ts.hour() as f64;
        let day = (t / 24) as f64;

        let mut weather = [[0.0; 4]; 5];
        let mut rain_avg = 0.0;
        let mut wind_avg = 0.0;
        for (c, w) in weather.iter_mut().enumerate() {
            let city_offset = c as f64 * 1.7 - 3.0;
            let temp = 10.0
                + 8.0 * (tau * (hour - 9.0) / 24.0).sin()
                + city_offset
                + noise.sample(&mut rng);
            let humidity = (60.0
                + 20.0 * (tau * hour / 24.0 + c as f64).sin()
                + 5.0 * noise.sample(&mut rng))
            .clamp(5.0, 100.0);
            let rain = if rng.gen::<f64>() < 0.12 {
                (1.2 + 0.8 * noise.sample(&mut rng)).max(0.0)
            } else {
                0.0
            };
            let wind_speed =
                (5.0 + 3.0 * (tau * (day + c as f64) / 4.0).sin() + 1.5 * noise.sample(&mut rng))
                    .abs();
            *w = [temp, humidity, rain, wind_speed];
            rain_avg += rain / 5.0;
            wind_avg += wind_speed / 5.0;
        }

        let nuclear = 7000.0 + 50.0 * noise.sample(&mut rng);
        let wind = (1800.0 + 350.0 * wind_avg + 250.0 * noise.sample(&mut rng)).max(0.0);
        let solar = if (7.0..=19.0).contains(&hour) {
            (2800.0 * (tau / 2.0 * (hour - 7.0) / 12.0).sin() + 80.0 * noise.sample(&mut rng))
                .max(0.0)
        } else {
            0.0
        };
        let fossil =
            (4000.0 + 900.0 * (tau * day / 7.0).sin() + 300.0 * noise.sample(&mut rng)).max(0.0);
        let load = 24000.0
            + 3500.0 * (tau * (hour - 19.0) / 24.0).sin()
            + 1200.0 * (tau * day / 7.0).cos()
            + 400.0 * noise.sample(&mut rng);

        // Deliberately nonlinear price formation: thresholds and
        // interactions that a linear fit cannot capture.
        let mut price = 50.0 + 0.004 * (load - 24000.0) - 0.006 * wind - 0.003 * solar;
        if rain_avg < 0.1 {
            price += 6.0; // dry spell premium
        } else {
            price -= 3.0 * rain_avg.min(2.0);
        }
        if wind_avg > 7.0 {
            price -= 8.0;
        }
        if load > 26000.0 && wind < 2000.0 {
            price += 18.0; // scarcity spike
        }
        price += 4.0 * (tau * (hour - 20.0) / 24.0).sin().max(0.0);
        price += 1.2 * noise.sample(&mut rng);

        out.push(HourRecord {
            ts,
            nuclear,
            wind,
            solar,
            fossil,
            load,
            price,
            weather,
        });
    }
    out
}

fn ts_str(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Render the two CSVs in memory: `(energy, weather)`.
pub fn render_fixture_csvs(cfg: &SynthConfig) -> (String, String) {
    let records = simulate(cfg);
    let mut holes = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED);

    let mut energy = String::from(
        "time,generation nuclear,generation wind onshore,generation solar,generation fossil gas,total load actual,price actual\n",
    );
    for (t, r) in records.iter().enumerate() {
        // A few whole hours are absent from the energy feed.
        if t == 100 || t == 101 || t == 307 {
            continue;
        }
        let load_cell = if holes.gen::<f64>() < 0.01 {
            String::new()
        } else {
            format!("{:.1}", r.load)
        };
        // One duplicated timestamp: the first row is superseded below.
        if t == 42 {
            let _ = writeln!(
                energy,
                "{},{:.1},{:.1},{:.1},{:.1},{:.1},{:.2}",
                ts_str(&r.ts),
                r.nuclear,
                r.wind,
                r.solar,
                r.fossil,
                r.load - 500.0,
                r.price
            );
        }
        let _ = writeln!(
            energy,
            "{},{:.1},{:.1},{:.1},{:.1},{},{:.2}",
            ts_str(&r.ts),
            r.nuclear,
            r.wind,
            r.solar,
            r.fossil,
            load_cell,
            r.price
        );
    }

    let mut weather = String::from("dt_iso,city_name,temp,humidity,rain_3h,wind_speed\n");
    for (t, r) in records.iter().enumerate() {
        for (c, city) in CITIES.iter().enumerate() {
            // Valencia's feed drops out for a stretch; other cities lose
            // the odd record.
            if *city == "Valencia" && (200..215).contains(&t) {
                continue;
            }
            if holes.gen::<f64>() < 0.005 {
                continue;
            }
            let temp_cell = if holes.gen::<f64>() < 0.01 {
                String::new()
            } else {
                format!("{:.2}", r.weather[c][0])
            };
            let _ = writeln!(
                weather,
                "{},{},{},{:.1},{:.2},{:.2}",
                ts_str(&r.ts),
                city,
                temp_cell,
                r.weather[c][1],
                r.weather[c][2],
                r.weather[c][3]
            );
        }
    }
    (energy, weather)
}

/// Write `energy_synthetic.csv` and `weather_synthetic.csv` into `dir`.
pub fn write_fixture_csvs(dir: &Path, cfg: &SynthConfig) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let (energy, weather) = render_fixture_csvs(cfg);
    let energy_path = dir.join("energy_synthetic.csv");
    let weather_path = dir.join("weather_synthetic.csv");
    std::fs::write(&energy_path, energy)?;
    std::fs::write(&weather_path, weather)?;
    Ok((energy_path, weather_path))
}
