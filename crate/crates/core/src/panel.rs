//! Country-year panel ingestion.
//!
//! The canonical on-disk format is a long CSV with one row per country-year:
//!
//! ```text
//! country_code,country_name,subregion,year,co2_kt,gdp_const_usd
//! ```
//!
//! WDI-style wide downloads (one row per country and indicator, years as
//! columns) are converted on load. Emissions and output are stored both in
//! source units and as natural logs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{NeedError, Result};

pub const LONG_HEADER: [&str; 6] = [
    "country_code",
    "country_name",
    "subregion",
    "year",
    "co2_kt",
    "gdp_const_usd",
];

/// Seven subregion groups used for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subregion {
    EastAsiaPacific,
    EuropeCentralAsia,
    LatinAmericaCaribbean,
    MiddleEastNorthAfrica,
    NorthAmerica,
    SouthAsia,
    SubSaharanAfrica,
}

impl Subregion {
    pub const ALL: [Subregion; 7] = [
        Subregion::EastAsiaPacific,
        Subregion::EuropeCentralAsia,
        Subregion::LatinAmericaCaribbean,
        Subregion::MiddleEastNorthAfrica,
        Subregion::NorthAmerica,
        Subregion::SouthAsia,
        Subregion::SubSaharanAfrica,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Subregion::EastAsiaPacific => "EAP",
            Subregion::EuropeCentralAsia => "ECA",
            Subregion::LatinAmericaCaribbean => "LAC",
            Subregion::MiddleEastNorthAfrica => "MENA",
            Subregion::NorthAmerica => "NA",
            Subregion::SouthAsia => "SA",
            Subregion::SubSaharanAfrica => "SSA",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Subregion::EastAsiaPacific => "East Asia & Pacific",
            Subregion::EuropeCentralAsia => "Europe & Central Asia",
            Subregion::LatinAmericaCaribbean => "Latin America & Caribbean",
            Subregion::MiddleEastNorthAfrica => "Middle East & North Africa (MENA)",
            Subregion::NorthAmerica => "North America",
            Subregion::SouthAsia => "South Asia",
            Subregion::SubSaharanAfrica => "Sub-Saharan Africa (SSA)",
        }
    }
}

impl fmt::Display for Subregion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Subregion {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('&', "and");
        let r = match key.as_str() {
            "eap" | "east asia and pacific" => Subregion::EastAsiaPacific,
            "eca" | "europe and central asia" => Subregion::EuropeCentralAsia,
            "lac" | "latin america and caribbean" | "latin america and the caribbean" => {
                Subregion::LatinAmericaCaribbean
            }
            "mena"
            | "middle east and north africa"
            | "middle east and north africa (mena)" => Subregion::MiddleEastNorthAfrica,
            "na" | "north america" => Subregion::NorthAmerica,
            "sa" | "south asia" => Subregion::SouthAsia,
            "ssa" | "sub-saharan africa" | "sub-saharan africa (ssa)" => {
                Subregion::SubSaharanAfrica
            }
            _ => return Err(NeedError::invalid(format!("unknown subregion '{s}'"))),
        };
        Ok(r)
    }
}

const SUBREGIONS_CSV: &str = include_str!("../data/subregions.csv");
const ALIASES_CSV: &str = include_str!("../data/country_aliases.csv");

struct SubregionTable {
    by_key: HashMap<String, Subregion>,
    names: Vec<String>,
}

fn normalize_name(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| match c {
            '’' | '‘' | '`' => '\'',
            'á' | 'à' | 'â' | 'ã' | 'ä' => 'a',
            'é' | 'è' | 'ê' | 'ë' => 'e',
            'í' | 'ì' | 'î' | 'ï' => 'i',
            'ó' | 'ò' | 'ô' | 'õ' | 'ö' => 'o',
            'ú' | 'ù' | 'û' | 'ü' => 'u',
            'ç' => 'c',
            'Ô' => 'o',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

fn subregion_table() -> &'static SubregionTable {
    static TABLE: OnceLock<SubregionTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut by_key = HashMap::new();
        let mut names = Vec::new();
        for line in SUBREGIONS_CSV.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let (name, code) = line.rsplit_once(',').expect("bundled subregions.csv is well formed");
            let region: Subregion = code.parse().expect("bundled subregion code");
            by_key.insert(normalize_name(name), region);
            names.push(name.to_string());
        }
        let mut reader = csv::Reader::from_reader(ALIASES_CSV.as_bytes());
        for rec in reader.records() {
            let rec = rec.expect("bundled country_aliases.csv is well formed");
            let canonical = normalize_name(&rec[1]);
            let region = *by_key.get(&canonical).expect("alias targets a listed country");
            by_key.insert(normalize_name(&rec[0]), region);
        }
        SubregionTable { by_key, names }
    })
}

/// Looks up the subregion of a country by name (the bundled mapping is keyed
/// by country name; common WDI spellings are accepted as aliases).
pub fn subregion_of(country: &str) -> Result<Subregion> {
    let table = subregion_table();
    if let Some(r) = table.by_key.get(&normalize_name(country)) {
        return Ok(*r);
    }
    let probe = normalize_name(country);
    let mut scored: Vec<(f64, &String)> = table
        .names
        .iter()
        .map(|n| (strsim::normalized_levenshtein(&probe, &normalize_name(n)), n))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Err(NeedError::UnknownCountry {
        name: country.to_string(),
        suggestions: scored.into_iter().take(3).map(|(_, n)| n.clone()).collect(),
    })
}

/// Country names in the bundled mapping, in file order.
pub fn known_countries() -> impl Iterator<Item = (&'static str, Subregion)> {
    let table = subregion_table();
    table
        .names
        .iter()
        .map(move |n| (n.as_str(), table.by_key[&normalize_name(n)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub country_code: String,
    pub country_name: String,
    pub subregion: Subregion,
    pub year: i32,
    pub co2_kt: f64,
    pub gdp_const_usd: f64,
    pub ln_co2: f64,
    pub ln_gdp: f64,
}

/// One country's observations, sorted by strictly increasing year.
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySeries {
    pub country_code: String,
    pub country_name: String,
    pub subregion: Subregion,
    pub observations: Vec<PanelObservation>,
}

impl CountrySeries {
    pub fn years(&self) -> Vec<i32> {
        self.observations.iter().map(|o| o.year).collect()
    }

    pub fn ln_gdp(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.ln_gdp).collect()
    }

    pub fn ln_co2(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.ln_co2).collect()
    }

    pub fn get(&self, year: i32) -> Option<&PanelObservation> {
        self.observations
            .binary_search_by_key(&year, |o| o.year)
            .ok()
            .map(|i| &self.observations[i])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DropCounts {
    pub missing_or_nonpositive: usize,
    pub year_out_of_range: usize,
    pub short_country: usize,
    pub unmapped_country: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.missing_or_nonpositive + self.year_out_of_range + self.short_country + self.unmapped_country
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PanelMetadata {
    pub source: String,
    pub rows_in: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
    pub drops: DropCounts,
    pub excluded_countries: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Panel {
    /// Countries sorted by code.
    pub countries: Vec<CountrySeries>,
    pub metadata: PanelMetadata,
}

impl Panel {
    pub fn n_observations(&self) -> usize {
        self.countries.iter().map(|c| c.observations.len()).sum()
    }

    pub fn observations(&self) -> impl Iterator<Item = &PanelObservation> {
        self.countries.iter().flat_map(|c| c.observations.iter())
    }

    pub fn country(&self, code: &str) -> Option<&CountrySeries> {
        self.countries
            .binary_search_by(|c| c.country_code.as_str().cmp(code))
            .ok()
            .map(|i| &self.countries[i])
    }

    pub fn subregion_map(&self) -> BTreeMap<String, Subregion> {
        self.countries
            .iter()
            .map(|c| (c.country_code.clone(), c.subregion))
            .collect()
    }
}

/// Column declarations for a WDI wide download.
#[derive(Debug, Clone)]
pub struct WideLayout {
    pub id_column: String,
    pub name_column: Option<String>,
    pub indicator_column: String,
    /// Explicit year column names; empty means "every column whose name starts
    /// with a four-digit year".
    pub year_columns: Vec<String>,
    pub co2_indicator: String,
    pub gdp_indicator: String,
}

impl Default for WideLayout {
    fn default() -> Self {
        WideLayout {
            id_column: "Country Code".into(),
            name_column: Some("Country Name".into()),
            indicator_column: "Series Code".into(),
            year_columns: Vec::new(),
            co2_indicator: "EN.ATM.CO2E.KT".into(),
            gdp_indicator: "NY.GDP.MKTP.KD".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum CsvLayout {
    Long,
    Wide(WideLayout),
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub layout: CsvLayout,
    pub year_min: i32,
    pub year_max: i32,
    /// Rolling window length; countries need at least `window_length + 4` rows.
    pub window_length: usize,
    pub source: String,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            layout: CsvLayout::Long,
            year_min: 1991,
            year_max: 2022,
            window_length: 5,
            source: "<stream>".into(),
        }
    }
}

impl IngestConfig {
    pub fn min_country_length(&self) -> usize {
        self.window_length + 4
    }
}

/// A parsed row before validation. Missing or unparseable values are `None`.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub country_code: String,
    pub country_name: String,
    pub subregion: Option<Subregion>,
    pub year: i32,
    pub co2_kt: Option<f64>,
    pub gdp_const_usd: Option<f64>,
}

fn parse_value(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() || t == ".." || t.eq_ignore_ascii_case("na") {
        return None;
    }
    t.parse::<f64>().ok()
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().trim_start_matches('\u{feff}') == name)
        .ok_or_else(|| NeedError::Schema(format!("missing column '{name}'")))
}

fn read_long<R: Read>(src: R) -> Result<(Vec<RawRecord>, usize)> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(src);
    let headers = reader.headers()?.clone();
    let idx: Vec<usize> = LONG_HEADER
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut unparsable = 0;
    for rec in reader.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("").trim();
        let Ok(year) = field(3).parse::<i32>() else {
            unparsable += 1;
            continue;
        };
        let subregion = match field(2) {
            "" => None,
            s => Some(s.parse::<Subregion>()?),
        };
        out.push(RawRecord {
            country_code: field(0).to_string(),
            country_name: field(1).to_string(),
            subregion,
            year,
            co2_kt: parse_value(field(4)),
            gdp_const_usd: parse_value(field(5)),
        });
    }
    Ok((out, unparsable))
}

fn header_year(h: &str) -> Option<i32> {
    let h = h.trim();
    if h.len() >= 4 && h.as_bytes()[..4].iter().all(u8::is_ascii_digit) {
        h[..4].parse().ok()
    } else {
        None
    }
}

fn read_wide<R: Read>(src: R, layout: &WideLayout) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(src);
    let headers = reader.headers()?.clone();
    let id = column_index(&headers, &layout.id_column)?;
    let name = layout
        .name_column
        .as_deref()
        .map(|n| column_index(&headers, n))
        .transpose()?;
    let indicator = column_index(&headers, &layout.indicator_column)?;
    let years: Vec<(usize, i32)> = if layout.year_columns.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| header_year(h).map(|y| (i, y)))
            .collect()
    } else {
        layout
            .year_columns
            .iter()
            .map(|c| {
                let i = column_index(&headers, c)?;
                let y = header_year(c)
                    .ok_or_else(|| NeedError::Schema(format!("year column '{c}' has no year")))?;
                Ok((i, y))
            })
            .collect::<Result<_>>()?
    };
    if years.is_empty() {
        return Err(NeedError::Schema("no year columns found".into()));
    }

    // (code) -> (name, year -> (co2, gdp))
    type Cells = BTreeMap<i32, (Option<f64>, Option<f64>)>;
    let mut by_country: BTreeMap<String, (String, Cells)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let ind = rec.get(indicator).unwrap_or("").trim();
        let is_co2 = ind == layout.co2_indicator;
        if !is_co2 && ind != layout.gdp_indicator {
            continue;
        }
        let code = rec.get(id).unwrap_or("").trim().to_string();
        if code.is_empty() {
            continue;
        }
        let cname = name
            .and_then(|i| rec.get(i))
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|| code.clone());
        let entry = by_country.entry(code).or_insert_with(|| (cname, Cells::new()));
        for &(col, year) in &years {
            let v = parse_value(rec.get(col).unwrap_or(""));
            let cell = entry.1.entry(year).or_insert((None, None));
            let slot = if is_co2 { &mut cell.0 } else { &mut cell.1 };
            if slot.is_some() {
                return Err(NeedError::DuplicateObservation {
                    country: entry.0.clone(),
                    year,
                });
            }
            *slot = v;
        }
    }
    Ok(by_country
        .into_iter()
        .flat_map(|(code, (cname, cells))| {
            cells.into_iter().map(move |(year, (co2, gdp))| RawRecord {
                country_code: code.clone(),
                country_name: cname.clone(),
                subregion: None,
                year,
                co2_kt: co2,
                gdp_const_usd: gdp,
            })
        })
        .collect())
}

/// Validates raw records and assembles a [`Panel`].
pub fn assemble_panel(records: Vec<RawRecord>, cfg: &IngestConfig) -> Result<Panel> {
    assemble_with_unparsable(records, 0, cfg)
}

fn assemble_with_unparsable(records: Vec<RawRecord>, unparsable: usize, cfg: &IngestConfig) -> Result<Panel> {
    if cfg.window_length < 3 {
        return Err(NeedError::invalid("window_length must be at least 3"));
    }
    let mut meta = PanelMetadata {
        source: cfg.source.clone(),
        rows_in: records.len() + unparsable,
        ..Default::default()
    };
    meta.drops.missing_or_nonpositive = unparsable;

    let mut by_country: BTreeMap<String, Vec<RawRecord>> = BTreeMap::new();
    for r in records {
        by_country.entry(r.country_code.clone()).or_default().push(r);
    }

    let mut countries = Vec::new();
    for (code, mut rows) in by_country {
        rows.sort_by_key(|r| r.year);
        if let Some(w) = rows.windows(2).find(|w| w[0].year == w[1].year) {
            return Err(NeedError::DuplicateObservation {
                country: code,
                year: w[0].year,
            });
        }
        let n_rows = rows.len();
        let name = rows[0].country_name.clone();
        let subregion = match rows.iter().find_map(|r| r.subregion) {
            Some(s) => s,
            None => match subregion_of(&name) {
                Ok(s) => s,
                Err(e) => {
                    let msg = format!("{code}: {e}; country excluded");
                    log::warn!("{msg}");
                    meta.warnings.push(msg);
                    meta.drops.unmapped_country += n_rows;
                    meta.excluded_countries.push(code);
                    continue;
                }
            },
        };
        let mut obs = Vec::with_capacity(n_rows);
        for r in rows {
            if r.year < cfg.year_min || r.year > cfg.year_max {
                meta.drops.year_out_of_range += 1;
                continue;
            }
            match (r.co2_kt, r.gdp_const_usd) {
                (Some(co2), Some(gdp)) if co2 > 0.0 && gdp > 0.0 && co2.is_finite() && gdp.is_finite() => {
                    obs.push(PanelObservation {
                        country_code: code.clone(),
                        country_name: name.clone(),
                        subregion,
                        year: r.year,
                        co2_kt: co2,
                        gdp_const_usd: gdp,
                        ln_co2: co2.ln(),
                        ln_gdp: gdp.ln(),
                    });
                }
                _ => meta.drops.missing_or_nonpositive += 1,
            }
        }
        if obs.is_empty() {
            let msg = format!("{code}: no usable rows; country excluded");
            log::warn!("{msg}");
            meta.warnings.push(msg);
            meta.excluded_countries.push(code);
            continue;
        }
        if obs.len() < cfg.min_country_length() {
            let msg = format!(
                "{code}: {} usable rows < {} required; country excluded",
                obs.len(),
                cfg.min_country_length()
            );
            log::warn!("{msg}");
            meta.warnings.push(msg);
            meta.drops.short_country += obs.len();
            meta.excluded_countries.push(code);
            continue;
        }
        countries.push(CountrySeries {
            country_code: code,
            country_name: name,
            subregion,
            observations: obs,
        });
    }
    meta.rows_kept = countries.iter().map(|c| c.observations.len()).sum();
    meta.rows_dropped = meta.drops.total();
    debug_assert_eq!(meta.rows_in, meta.rows_kept + meta.rows_dropped);
    Ok(Panel {
        countries,
        metadata: meta,
    })
}

/// Loads and validates a panel from CSV bytes.
pub fn load_panel<R: Read>(src: R, cfg: &IngestConfig) -> Result<Panel> {
    match &cfg.layout {
        CsvLayout::Long => {
            let (records, unparsable) = read_long(src)?;
            assemble_with_unparsable(records, unparsable, cfg)
        }
        CsvLayout::Wide(layout) => {
            let records = read_wide(src, layout)?;
            assemble_panel(records, cfg)
        }
    }
}

/// Writes the panel in canonical long format.
pub fn write_long_csv<W: Write>(panel: &Panel, dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(LONG_HEADER)?;
    for o in panel.observations() {
        w.write_record([
            o.country_code.clone(),
            o.country_name.clone(),
            o.subregion.code().to_string(),
            o.year.to_string(),
            o.co2_kt.to_string(),
            o.gdp_const_usd.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn long(rows: &[&str]) -> String {
        let mut s = LONG_HEADER.join(",");
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    fn cfg_short() -> IngestConfig {
        IngestConfig {
            window_length: 3,
            year_min: 1900,
            year_max: 2100,
            ..Default::default()
        }
    }

    fn country_rows(code: &str, name: &str, region: &str, years: std::ops::Range<i32>) -> Vec<String> {
        years
            .map(|y| format!("{code},{name},{region},{y},{},{}", 1000.0 + y as f64, 1.0e9 * (1.0 + (y - 1990) as f64 * 0.01)))
            .collect()
    }

    #[test]
    fn logs_are_natural_logs() {
        let mut rows = vec!["CMR,Cameroon,SSA,2000,5000,1.0e10".to_string()];
        rows.extend(country_rows("CMR", "Cameroon", "SSA", 2001..2010));
        let text = long(&rows.iter().map(String::as_str).collect::<Vec<_>>());
        let panel = load_panel(text.as_bytes(), &cfg_short()).unwrap();
        let o = panel.country("CMR").unwrap().get(2000).unwrap();
        assert!((o.ln_co2 - 8.517193191416238).abs() < 1e-12);
        assert!((o.ln_gdp - 23.025850929940457).abs() < 1e-12);
        assert_eq!(o.subregion, Subregion::SubSaharanAfrica);
    }

    #[test]
    fn zero_co2_row_is_dropped_and_counted() {
        let mut rows = vec!["CMR,Cameroon,SSA,2000,0,1.0e10".to_string()];
        rows.extend(country_rows("CMR", "Cameroon", "SSA", 2001..2010));
        let text = long(&rows.iter().map(String::as_str).collect::<Vec<_>>());
        let panel = load_panel(text.as_bytes(), &cfg_short()).unwrap();
        assert_eq!(panel.metadata.drops.missing_or_nonpositive, 1);
        assert_eq!(panel.metadata.rows_in, 10);
        assert_eq!(panel.metadata.rows_kept, 9);
        assert!(panel.country("CMR").unwrap().get(2000).is_none());
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let text = "country_code,country_name,subregion,year,co2_kt\nA,B,SSA,2000,1\n";
        let err = load_panel(text.as_bytes(), &cfg_short()).unwrap_err();
        assert!(err.to_string().contains("gdp_const_usd"), "{err}");
    }

    #[test]
    fn duplicate_country_year_is_fatal() {
        let mut rows = country_rows("CMR", "Cameroon", "SSA", 2000..2010);
        rows.push("CMR,Cameroon,SSA,2003,5,5".into());
        let text = long(&rows.iter().map(String::as_str).collect::<Vec<_>>());
        let err = load_panel(text.as_bytes(), &cfg_short()).unwrap_err();
        assert!(matches!(err, NeedError::DuplicateObservation { year: 2003, .. }));
    }

    #[test]
    fn short_and_empty_countries_are_excluded() {
        let mut rows = country_rows("CMR", "Cameroon", "SSA", 2000..2010);
        rows.extend(country_rows("GAB", "Gabon", "SSA", 2000..2003));
        rows.push("TCD,Chad,SSA,2000,,".into());
        let text = long(&rows.iter().map(String::as_str).collect::<Vec<_>>());
        let panel = load_panel(text.as_bytes(), &cfg_short()).unwrap();
        assert_eq!(panel.countries.len(), 1);
        assert_eq!(panel.metadata.excluded_countries, vec!["GAB", "TCD"]);
        let m = &panel.metadata;
        assert_eq!(m.rows_in, m.rows_kept + m.rows_dropped);
    }

    #[test]
    fn years_outside_bounds_are_filtered() {
        let rows = country_rows("CMR", "Cameroon", "SSA", 1985..2000);
        let text = long(&rows.iter().map(String::as_str).collect::<Vec<_>>());
        let cfg = IngestConfig {
            window_length: 3,
            ..Default::default()
        };
        let panel = load_panel(text.as_bytes(), &cfg).unwrap();
        assert_eq!(panel.metadata.drops.year_out_of_range, 6);
        assert_eq!(panel.country("CMR").unwrap().observations[0].year, 1991);
    }

    #[test]
    fn subregion_lookup() {
        assert_eq!(subregion_of("Cameroon").unwrap(), Subregion::SubSaharanAfrica);
        assert_eq!(subregion_of("Canada").unwrap(), Subregion::NorthAmerica);
        assert_eq!(subregion_of("United States").unwrap(), Subregion::NorthAmerica);
        assert_eq!(subregion_of("Mexico").unwrap(), Subregion::NorthAmerica);
        assert_eq!(subregion_of("India").unwrap(), Subregion::SouthAsia);
        assert_eq!(subregion_of("China").unwrap(), Subregion::EastAsiaPacific);
        assert_eq!(subregion_of("Cote d'Ivoire").unwrap(), Subregion::SubSaharanAfrica);
        assert_eq!(subregion_of("Egypt, Arab Rep.").unwrap(), Subregion::MiddleEastNorthAfrica);
    }

    #[test]
    fn unknown_country_lists_suggestions() {
        match subregion_of("Atlantis") {
            Err(NeedError::UnknownCountry { suggestions, .. }) => assert_eq!(suggestions.len(), 3),
            other => panic!("expected unknown-country error, got {other:?}"),
        }
        match subregion_of("Camerun") {
            Err(NeedError::UnknownCountry { suggestions, .. }) => assert_eq!(suggestions[0], "Cameroon"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bundled_mapping_covers_all_seven_groups() {
        let mut counts = BTreeMap::new();
        for (_, r) in known_countries() {
            *counts.entry(r).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 7);
        assert_eq!(counts[&Subregion::NorthAmerica], 3);
        assert_eq!(counts[&Subregion::SubSaharanAfrica], 49);
        assert_eq!(counts[&Subregion::MiddleEastNorthAfrica], 20);
    }

    #[test]
    fn wide_layout_is_converted() {
        let text = "Country Name,Country Code,Series Name,Series Code,2000 [YR2000],2001 [YR2001],2002 [YR2002]\n\
                    Cameroon,CMR,CO2,EN.ATM.CO2E.KT,5000,5100,..\n\
                    Cameroon,CMR,GDP,NY.GDP.MKTP.KD,1e10,1.1e10,1.2e10\n\
                    Cameroon,CMR,Pop,SP.POP.TOTL,1,2,3\n";
        let cfg = IngestConfig {
            layout: CsvLayout::Wide(WideLayout::default()),
            window_length: 3,
            year_min: 1900,
            year_max: 2100,
            source: "wide".into(),
        };
        let panel = load_panel(text.as_bytes(), &cfg).unwrap();
        // two usable rows < 7 required
        assert!(panel.countries.is_empty());
        assert_eq!(panel.metadata.rows_in, 3);
        assert_eq!(panel.metadata.drops.missing_or_nonpositive, 1);
        assert_eq!(panel.metadata.drops.short_country, 2);
    }

    #[test]
    fn gaps_inside_a_country_are_kept() {
        let mut rows = country_rows("CMR", "Cameroon", "SSA", 2000..2005);
        rows.extend(country_rows("CMR", "Cameroon", "SSA", 2007..2012));
        let text = long(&rows.iter().map(String::as_str).collect::<Vec<_>>());
        let panel = load_panel(text.as_bytes(), &cfg_short()).unwrap();
        assert_eq!(panel.country("CMR").unwrap().observations.len(), 10);
    }
}
