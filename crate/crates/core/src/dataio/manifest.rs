use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of one plant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantManifest {
    pub plant_id: String,
    pub capacity_mw: f64,
    /// Degrees west.
    pub lon: f64,
    pub lat: f64,
    #[serde(default = "default_timezone")]
    pub timezone: String,
    /// CSV file name, relative to the manifest's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

fn default_timezone() -> String {
    "America/Los_Angeles".to_string()
}

impl PlantManifest {
    pub fn new(plant_id: &str, capacity_mw: f64, lon: f64, lat: f64) -> Self {
        Self {
            plant_id: plant_id.to_string(),
            capacity_mw,
            lon,
            lat,
            timezone: default_timezone(),
            file: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_mw > 0.0) || !self.capacity_mw.is_finite() {
            return Err(Error::config(format!(
                "plant {}: capacity must be > 0, got {}",
                self.plant_id, self.capacity_mw
            )));
        }
        if self.plant_id.is_empty() {
            return Err(Error::config("plant_id must not be empty"));
        }
        Ok(())
    }

    pub fn csv_name(&self) -> String {
        self.file.clone().unwrap_or_else(|| format!("{}.csv", self.plant_id))
    }
}

/// A set of plants with unique ids, as stored in a manifest file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantRegistry {
    #[serde(rename = "plant")]
    pub plants: Vec<PlantManifest>,
}

impl PlantRegistry {
    pub fn new(plants: Vec<PlantManifest>) -> Result<Self> {
        let r = Self { plants };
        r.validate()?;
        Ok(r)
    }

    /// The three plants of the reference study: capacities 13, 8 and 8 MW.
    pub fn default_three() -> Self {
        Self {
            plants: vec![
                PlantManifest::new("A", 13.0, 117.25, 32.65),
                PlantManifest::new("B", 8.0, 117.05, 32.75),
                PlantManifest::new("C", 8.0, 116.75, 32.85),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in &self.plants {
            p.validate()?;
            if !seen.insert(p.plant_id.as_str()) {
                return Err(Error::config(format!("duplicate plant_id {}", p.plant_id)));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&PlantManifest> {
        self.plants.iter().find(|p| p.plant_id == id)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let r: Self = toml::from_str(text).map_err(|e| Error::config(format!("plant manifest: {e}")))?;
        r.validate()?;
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_capacities() {
        let r = PlantRegistry::default_three();
        let caps: Vec<f64> = r.plants.iter().map(|p| p.capacity_mw).collect();
        assert_eq!(caps, vec![13.0, 8.0, 8.0]);
        let back = PlantRegistry::from_toml_str(&r.to_toml_string()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rejects_bad_capacity_and_duplicates() {
        let mut r = PlantRegistry::default_three();
        r.plants[1].capacity_mw = 0.0;
        assert!(matches!(r.validate(), Err(Error::Config(_))));
        let mut r = PlantRegistry::default_three();
        r.plants[2].plant_id = "A".into();
        assert!(r.validate().is_err());
    }
}
