"""JSON mechanism configuration: parsing, merging, validation, round-trip.

Every document is an object with a top-level ``camp-data`` array of typed
entries (``{"type": "...", ...}``).  Entries from any number of documents
are merged into one :class:`MechanismConfig`; the merged result is put in a
canonical order so that neither the order of documents nor the order of
entries inside them changes the outcome.  The full key reference lives in
``docs/schema.md``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from os import PathLike
from typing import Any, Iterable, Sequence

GAS = "gas"
AEROSOL = "aerosol"

# process type -> (required keys, optional keys); keys are top-level entry keys
PROCESS_SCHEMA: dict[str, tuple[frozenset[str], frozenset[str]]] = {
    "ARRHENIUS": (
        frozenset({"reactants", "A"}),
        frozenset({"products", "Ea", "C", "B", "D", "E", "mass_yield"}),
    ),
    "TROE": (
        frozenset({"reactants", "k0_A", "kinf_A"}),
        frozenset({"products", "k0_B", "k0_C", "kinf_B", "kinf_C", "Fc", "N", "mass_yield"}),
    ),
    "CUSTOM_H2O2": (
        frozenset({"reactants", "k1_A", "k2_A"}),
        frozenset({"products", "k1_B", "k1_C", "k2_B", "k2_C", "mass_yield"}),
    ),
    "CUSTOM_OH_HNO3": (
        frozenset({"reactants", "k0_A", "k2_A", "k3_A"}),
        frozenset(
            {"products", "k0_B", "k0_C", "k2_B", "k2_C", "k3_B", "k3_C", "mass_yield"}
        ),
    ),
    "WENNBERG_TUNNELING": (
        frozenset({"reactants", "A"}),
        frozenset({"products", "B", "C", "mass_yield"}),
    ),
    "WENNBERG_NO_RO2": (
        frozenset({"reactants", "X", "Y", "a0", "n", "alkoxy_products", "nitrate_products"}),
        frozenset({"mass_yield"}),
    ),
    "PHOTOLYSIS": (frozenset({"reactants"}), frozenset({"products", "rate", "mass_yield"})),
    "FIRST_ORDER_LOSS": (frozenset({"species"}), frozenset({"rate"})),
    "EMISSION": (frozenset({"species"}), frozenset({"rate"})),
    "CONDENSED_PHASE_ARRHENIUS": (
        frozenset({"aerosol_phase", "reactants", "A"}),
        frozenset({"products", "Ea", "C", "B", "D", "E", "units", "aerosol_water"}),
    ),
    "AQUEOUS_REVERSIBLE": (
        frozenset({"aerosol_phase", "reactants", "products", "A", "k_reverse"}),
        frozenset({"C", "units", "aerosol_water"}),
    ),
    "HENRYS_LAW_PHASE_TRANSFER": (
        frozenset({"gas_species", "aerosol_phase", "aerosol_species", "aerosol_water", "H298"}),
        frozenset({"C"}),
    ),
    "SIMPOL_PHASE_TRANSFER": (
        frozenset({"gas_species", "aerosol_phase", "aerosol_species", "B"}),
        frozenset(),
    ),
}

PROCESS_TYPES = tuple(sorted(PROCESS_SCHEMA))
ELECTROLYTE_FORMS = ("molality", "sqrt_molality")
UPDATABLE_TYPES = frozenset({"PHOTOLYSIS", "FIRST_ORDER_LOSS", "EMISSION"})
CONDENSED_TYPES = frozenset({"CONDENSED_PHASE_ARRHENIUS", "AQUEOUS_REVERSIBLE"})
TRANSFER_TYPES = frozenset({"HENRYS_LAW_PHASE_TRANSFER", "SIMPOL_PHASE_TRANSFER"})

_SPECIES_KEYS = {
    "name", "phase", "molecular_weight", "density", "diffusion_coeff",
    "mass_accommodation", "absolute_tolerance",
}
_PHASE_KEYS = {"name", "species"}
_MODAL_KEYS = {"name", "modes", "sections"}
_PARTICLE_KEYS = {"name", "max_computational_particles", "phases"}
_ZSR_KEYS = {"label", "aerosol_phase", "water_species", "electrolytes"}
_ENTRY_TYPES = {
    "CHEM_SPEC", "AERO_PHASE", "AERO_REP_MODAL_SECTIONAL", "AERO_REP_SINGLE_PARTICLE",
    "ZSR_AEROSOL_WATER", "RELATIVE_TOLERANCE", *PROCESS_SCHEMA,
}
# keys of a process entry that name species rather than carrying numbers
_REF_KEYS = ("species", "gas_species", "aerosol_species", "aerosol_water")


class ConfigError(ValueError):
    """Raised when configuration documents cannot be parsed or merged."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class SpeciesDef:
    name: str
    kind: str = GAS
    molecular_weight: float = 0.0
    density: float | None = None
    gas_diffusion_coeff: float | None = None
    mass_accommodation_alpha: float = 1.0
    absolute_tolerance: float | None = None


@dataclass(frozen=True)
class AerosolPhaseDef:
    name: str
    species: tuple[str, ...]


@dataclass(frozen=True)
class ModeDef:
    name: str
    gmd: float
    gsd: float
    phases: tuple[str, ...]


@dataclass(frozen=True)
class SectionDef:
    name: str
    mid_diameter: float
    phases: tuple[str, ...]


@dataclass(frozen=True)
class AeroRepConfig:
    scheme: str  # "modal_sectional" | "single_particle"
    name: str = "aerosol"
    modes: tuple[ModeDef, ...] = ()
    sections: tuple[SectionDef, ...] = ()
    max_computational_particles: int = 0
    phases: tuple[str, ...] = ()  # phases hosted by every computational particle


@dataclass(frozen=True)
class ProcessConfig:
    process_type: str
    reactants: tuple[tuple[str, int], ...] = ()
    products: tuple[tuple[str, float], ...] = ()
    rate_parameters: tuple[tuple[str, float], ...] = ()
    phase: str = GAS
    label: str | None = None
    refs: tuple[tuple[str, str], ...] = ()
    branches: tuple[tuple[str, tuple[tuple[str, float], ...]], ...] = ()
    units: str | None = None
    mass_yield: str | None = None  # reactant whose mass the product yields refer to
    extras: tuple[str, ...] = ()

    @property
    def params(self) -> dict[str, float]:
        return dict(self.rate_parameters)

    def ref(self, key: str) -> str | None:
        return dict(self.refs).get(key)

    def branch(self, key: str) -> tuple[tuple[str, float], ...]:
        return dict(self.branches).get(key, ())


@dataclass(frozen=True)
class Electrolyte:
    name: str
    molecular_weight: float
    molality_poly: tuple[float, ...]
    form: str = "molality"  # or "sqrt_molality": the polynomial gives m**0.5


@dataclass(frozen=True)
class ParameterConfig:
    parameter_type: str
    label: str | None
    phase: str
    target_water_species: str
    electrolytes: tuple[Electrolyte, ...]


@dataclass(frozen=True)
class MechanismConfig:
    species: tuple[SpeciesDef, ...] = ()
    phases: tuple[AerosolPhaseDef, ...] = ()
    aero_rep: AeroRepConfig | None = None
    processes: tuple[ProcessConfig, ...] = ()
    parameters: tuple[ParameterConfig, ...] = ()
    relative_tolerance: float | None = None

    def species_by_kind(self, kind: str) -> tuple[SpeciesDef, ...]:
        return tuple(s for s in self.species if s.kind == kind)

    def find_species(self, name: str, kind: str) -> SpeciesDef | None:
        for s in self.species:
            if s.name == name and s.kind == kind:
                return s
        return None

    def find_phase(self, name: str) -> AerosolPhaseDef | None:
        for p in self.phases:
            if p.name == name:
                return p
        return None

    def with_aero_rep(self, rep: AeroRepConfig | None) -> "MechanismConfig":
        return MechanismConfig(
            self.species, self.phases, rep, self.processes, self.parameters,
            self.relative_tolerance,
        )


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "ERROR" | "WARNING"
    code: str
    message: str
    path: str

    def __str__(self) -> str:
        return f"{self.severity} [{self.code}] {self.path}: {self.message}"


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", where)
    return float(value)


def _string(value: Any, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"expected a non-empty string, got {value!r}", where)
    return value


def _string_list(value: Any, where: str) -> tuple[str, ...]:
    if not isinstance(value, list):
        raise ConfigError("expected a list of names", where)
    return tuple(_string(v, f"{where}[{i}]") for i, v in enumerate(value))


def _reactants(value: Any, where: str) -> tuple[tuple[str, int], ...]:
    if not isinstance(value, dict):
        raise ConfigError("expected an object mapping species to {qty}", where)
    out = []
    for name, spec in value.items():
        spec = spec or {}
        if not isinstance(spec, dict):
            raise ConfigError("reactant entry must be an object", f"{where}.{name}")
        qty = spec.get("qty", 1)
        if isinstance(qty, bool) or not isinstance(qty, (int, float)) or int(qty) != qty:
            raise ConfigError(f"qty must be an integer, got {qty!r}", f"{where}.{name}")
        out.append((name, int(qty)))
    return tuple(sorted(out))


def _products(value: Any, where: str) -> tuple[tuple[str, float], ...]:
    if not isinstance(value, dict):
        raise ConfigError("expected an object mapping species to {yield}", where)
    out = []
    for name, spec in value.items():
        spec = spec or {}
        if not isinstance(spec, dict):
            raise ConfigError("product entry must be an object", f"{where}.{name}")
        out.append((name, _number(spec.get("yield", 1.0), f"{where}.{name}.yield")))
    return tuple(sorted(out))


def _parse_species(entry: dict, where: str) -> SpeciesDef:
    kind = str(entry.get("phase", "GAS")).lower()
    if kind not in (GAS, AEROSOL):
        raise ConfigError(f"phase must be GAS or AEROSOL, got {entry.get('phase')!r}", where)

    def opt(key):
        return None if key not in entry else _number(entry[key], f"{where}.{key}")

    return SpeciesDef(
        name=_string(entry.get("name"), f"{where}.name"),
        kind=kind,
        molecular_weight=_number(entry.get("molecular_weight", 0.0), f"{where}.molecular_weight"),
        density=opt("density"),
        gas_diffusion_coeff=opt("diffusion_coeff"),
        mass_accommodation_alpha=_number(
            entry.get("mass_accommodation", 1.0), f"{where}.mass_accommodation"
        ),
        absolute_tolerance=opt("absolute_tolerance"),
    )


def _parse_modal(entry: dict, where: str) -> AeroRepConfig:
    modes = []
    for i, m in enumerate(entry.get("modes", [])):
        w = f"{where}.modes[{i}]"
        modes.append(
            ModeDef(
                _string(m.get("name"), f"{w}.name"),
                _number(m.get("GMD"), f"{w}.GMD"),
                _number(m.get("GSD"), f"{w}.GSD"),
                _string_list(m.get("phases", []), f"{w}.phases"),
            )
        )
    sections = []
    for i, s in enumerate(entry.get("sections", [])):
        w = f"{where}.sections[{i}]"
        sections.append(
            SectionDef(
                _string(s.get("name"), f"{w}.name"),
                _number(s.get("mid_diameter"), f"{w}.mid_diameter"),
                _string_list(s.get("phases", []), f"{w}.phases"),
            )
        )
    return AeroRepConfig(
        "modal_sectional", entry.get("name", "aerosol"), tuple(modes), tuple(sections)
    )


def _parse_particle(entry: dict, where: str) -> AeroRepConfig:
    n = entry.get("max_computational_particles")
    if isinstance(n, bool) or not isinstance(n, int):
        raise ConfigError("max_computational_particles must be an integer", where)
    return AeroRepConfig(
        "single_particle", entry.get("name", "aerosol"),
        max_computational_particles=n,
        phases=_string_list(entry.get("phases", []), f"{where}.phases"),
    )


def _parse_zsr(entry: dict, where: str) -> ParameterConfig:
    electrolytes = []
    raw = entry.get("electrolytes")
    if not isinstance(raw, list):
        raise ConfigError("electrolytes must be a list", f"{where}.electrolytes")
    for i, e in enumerate(raw):
        w = f"{where}.electrolytes[{i}]"
        poly = e.get("molality_poly")
        if not isinstance(poly, list):
            raise ConfigError("molality_poly must be a list of coefficients", w)
        electrolytes.append(
            Electrolyte(
                _string(e.get("name"), f"{w}.name"),
                _number(e.get("molecular_weight"), f"{w}.molecular_weight"),
                tuple(_number(c, f"{w}.molality_poly[{j}]") for j, c in enumerate(poly)),
                _string(e.get("form", "molality"), f"{w}.form"),
            )
        )
    return ParameterConfig(
        "ZSR",
        entry.get("label"),
        _string(entry.get("aerosol_phase"), f"{where}.aerosol_phase"),
        _string(entry.get("water_species"), f"{where}.water_species"),
        tuple(electrolytes),
    )


def _parse_process(entry: dict, where: str) -> ProcessConfig:
    ptype = entry["type"]
    required, optional = PROCESS_SCHEMA[ptype]
    known = required | optional | {"type", "label"}
    extras = tuple(sorted(k for k in entry if k not in known))
    reactants = _reactants(entry["reactants"], f"{where}.reactants") if "reactants" in entry else ()
    products = _products(entry["products"], f"{where}.products") if "products" in entry else ()
    branches = tuple(
        (key, _products(entry[key], f"{where}.{key}"))
        for key in ("alkoxy_products", "nitrate_products")
        if key in entry
    )
    refs = tuple(
        (key, _string(entry[key], f"{where}.{key}")) for key in _REF_KEYS if key in entry
    )
    params = {}
    for key in sorted(required | optional):
        if key not in entry or key in ("reactants", "products", "alkoxy_products",
                                       "nitrate_products", "aerosol_phase", "units",
                                       "mass_yield", *_REF_KEYS):
            continue
        if ptype == "SIMPOL_PHASE_TRANSFER" and key == "B":
            b = entry["B"]
            if not isinstance(b, list) or len(b) != 4:
                raise ConfigError("B must be a list of four SIMPOL coefficients", f"{where}.B")
            for i, v in enumerate(b):
                params[f"B{i + 1}"] = _number(v, f"{where}.B[{i}]")
            continue
        params[key] = _number(entry[key], f"{where}.{key}")
    phase = GAS
    if "aerosol_phase" in entry:
        phase = _string(entry["aerosol_phase"], f"{where}.aerosol_phase")
    units = entry.get("units")
    label = entry.get("label")
    if label is not None:
        label = _string(label, f"{where}.label")
    missing = tuple(sorted(k for k in required if k not in entry))
    return ProcessConfig(
        process_type=ptype,
        reactants=reactants,
        products=products,
        rate_parameters=tuple(sorted(params.items())),
        phase=phase,
        label=label,
        refs=refs,
        branches=branches,
        units=units,
        mass_yield=(_string(entry["mass_yield"], f"{where}.mass_yield")
                    if "mass_yield" in entry else None),
        # missing required keys are carried so that validate() can name them
        extras=extras + tuple(f"!missing:{k}" for k in missing),
    )


def _load_document(text: str, doc_index: int) -> list:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"JSON syntax error: {exc.msg} (line {exc.lineno}, column {exc.colno}, "
            f"char {exc.pos})",
            f"document[{doc_index}]",
        ) from None
    if not isinstance(data, dict) or not isinstance(data.get("camp-data"), list):
        raise ConfigError("top-level object must contain a 'camp-data' array",
                          f"document[{doc_index}]")
    return data["camp-data"]


def parse_config(documents: str | Sequence[str]) -> MechanismConfig:
    """Parse and merge one or more JSON documents into a MechanismConfig.

    Raises ConfigError on JSON syntax errors (with position), unknown entry
    types, malformed values and duplicate definitions.  Semantic checks
    (dangling names, required keys, value ranges) are left to validate().
    """
    if isinstance(documents, str):
        documents = [documents]
    species: dict[tuple[str, str], SpeciesDef] = {}
    phases: dict[str, AerosolPhaseDef] = {}
    reps: list[AeroRepConfig] = []
    processes: list[ProcessConfig] = []
    parameters: list[ParameterConfig] = []
    labels: set[str] = set()
    rtol: list[float] = []

    for d, text in enumerate(documents):
        for i, entry in enumerate(_load_document(text, d)):
            where = f"document[{d}].camp-data[{i}]"
            if not isinstance(entry, dict) or "type" not in entry:
                raise ConfigError("entry must be an object with a 'type' key", where)
            etype = entry["type"]
            if etype not in _ENTRY_TYPES:
                raise ConfigError(f"unknown type {etype!r}", where)
            if etype == "CHEM_SPEC":
                sp = _parse_species(entry, where)
                key = (sp.kind, sp.name)
                if key in species:
                    raise ConfigError(f"duplicate {sp.kind} species {sp.name!r}", where)
                species[key] = sp
            elif etype == "AERO_PHASE":
                name = _string(entry.get("name"), f"{where}.name")
                if name in phases:
                    raise ConfigError(f"duplicate aerosol phase {name!r}", where)
                phases[name] = AerosolPhaseDef(
                    name, _string_list(entry.get("species", []), f"{where}.species")
                )
            elif etype == "AERO_REP_MODAL_SECTIONAL":
                reps.append(_parse_modal(entry, where))
            elif etype == "AERO_REP_SINGLE_PARTICLE":
                reps.append(_parse_particle(entry, where))
            elif etype == "RELATIVE_TOLERANCE":
                rtol.append(_number(entry.get("value"), f"{where}.value"))
            else:
                if etype == "ZSR_AEROSOL_WATER":
                    item = _parse_zsr(entry, where)
                    parameters.append(item)
                else:
                    item = _parse_process(entry, where)
                    processes.append(item)
                if item.label is not None:
                    if item.label in labels:
                        raise ConfigError(f"duplicate label {item.label!r}", where)
                    labels.add(item.label)
    if len(reps) > 1:
        raise ConfigError("more than one aerosol representation defined")
    if len(rtol) > 1:
        raise ConfigError("more than one RELATIVE_TOLERANCE entry defined")

    return MechanismConfig(
        species=tuple(sorted(species.values(), key=lambda s: (s.kind != GAS, s.name))),
        phases=tuple(sorted(phases.values(), key=lambda p: p.name)),
        aero_rep=reps[0] if reps else None,
        processes=tuple(sorted(processes, key=_canonical_key)),
        parameters=tuple(sorted(parameters, key=_canonical_key)),
        relative_tolerance=rtol[0] if rtol else None,
    )


def _canonical_key(item: ProcessConfig | ParameterConfig) -> str:
    return repr(item)


def load_config(paths: Iterable[str | PathLike]) -> MechanismConfig:
    texts = []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            texts.append(fh.read())
    return parse_config(texts)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def _dump_process(p: ProcessConfig) -> dict:
    out: dict[str, Any] = {"type": p.process_type}
    if p.label is not None:
        out["label"] = p.label
    if p.phase != GAS:
        out["aerosol_phase"] = p.phase
    if p.reactants:
        out["reactants"] = {n: ({"qty": q} if q != 1 else {}) for n, q in p.reactants}
    if p.products:
        out["products"] = {n: {"yield": y} for n, y in p.products}
    for key, prods in p.branches:
        out[key] = {n: {"yield": y} for n, y in prods}
    for key, name in p.refs:
        out[key] = name
    params = dict(p.rate_parameters)
    if p.process_type == "SIMPOL_PHASE_TRANSFER" and "B1" in params:
        out["B"] = [params.pop(f"B{i}") for i in range(1, 5)]
    out.update(params)
    if p.units is not None:
        out["units"] = p.units
    if p.mass_yield is not None:
        out["mass_yield"] = p.mass_yield
    return out


def config_entries(config: MechanismConfig, include_aero_rep: bool = True) -> list[dict]:
    """Return the ``camp-data`` entries that reproduce ``config``."""
    entries: list[dict] = []
    for s in config.species:
        e: dict[str, Any] = {
            "type": "CHEM_SPEC", "name": s.name, "phase": s.kind.upper(),
            "molecular_weight": s.molecular_weight,
        }
        if s.density is not None:
            e["density"] = s.density
        if s.gas_diffusion_coeff is not None:
            e["diffusion_coeff"] = s.gas_diffusion_coeff
        if s.mass_accommodation_alpha != 1.0:
            e["mass_accommodation"] = s.mass_accommodation_alpha
        if s.absolute_tolerance is not None:
            e["absolute_tolerance"] = s.absolute_tolerance
        entries.append(e)
    for ph in config.phases:
        entries.append({"type": "AERO_PHASE", "name": ph.name, "species": list(ph.species)})
    rep = config.aero_rep
    if rep is not None and include_aero_rep:
        if rep.scheme == "modal_sectional":
            entries.append({
                "type": "AERO_REP_MODAL_SECTIONAL", "name": rep.name,
                "modes": [
                    {"name": m.name, "GMD": m.gmd, "GSD": m.gsd, "phases": list(m.phases)}
                    for m in rep.modes
                ],
                "sections": [
                    {"name": s.name, "mid_diameter": s.mid_diameter, "phases": list(s.phases)}
                    for s in rep.sections
                ],
            })
        else:
            entries.append({
                "type": "AERO_REP_SINGLE_PARTICLE", "name": rep.name,
                "max_computational_particles": rep.max_computational_particles,
                "phases": list(rep.phases),
            })
    for p in config.processes:
        entries.append(_dump_process(p))
    for par in config.parameters:
        e = {
            "type": "ZSR_AEROSOL_WATER", "aerosol_phase": par.phase,
            "water_species": par.target_water_species,
            "electrolytes": [
                {"name": el.name, "molecular_weight": el.molecular_weight,
                 "molality_poly": list(el.molality_poly), "form": el.form}
                for el in par.electrolytes
            ],
        }
        if par.label is not None:
            e["label"] = par.label
        entries.append(e)
    if config.relative_tolerance is not None:
        entries.append({"type": "RELATIVE_TOLERANCE", "value": config.relative_tolerance})
    return entries


def dump_config(config: MechanismConfig, include_aero_rep: bool = True, indent=None) -> str:
    return json.dumps(
        {"camp-data": config_entries(config, include_aero_rep)}, indent=indent
    )


def mechanism_hash(config: MechanismConfig) -> str:
    """sha256 of the mechanism with the aerosol representation left out."""
    text = json.dumps({"camp-data": config_entries(config, False)}, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


def _finite_positive(x) -> bool:
    return x is not None and math.isfinite(x) and x > 0


def validate(config: MechanismConfig) -> list[Diagnostic]:
    """Check every structural invariant; an empty list means the config is usable."""
    diags: list[Diagnostic] = []

    def err(code, msg, path):
        diags.append(Diagnostic("ERROR", code, msg, path))

    def warn(code, msg, path):
        diags.append(Diagnostic("WARNING", code, msg, path))

    if not config.species:
        err("no-species", "configuration defines no chemical species", "$.species")

    for s in config.species:
        path = f"$.species[{s.kind}:{s.name}]"
        if not _finite_positive(s.molecular_weight):
            err("invalid-value", f"molecular_weight of {s.name!r} must be > 0", path)
        if s.kind == AEROSOL and not _finite_positive(s.density):
            err("invalid-value", f"aerosol species {s.name!r} needs density > 0", path)
        if not (0.0 < s.mass_accommodation_alpha <= 1.0):
            err("invalid-value", f"mass_accommodation of {s.name!r} must be in (0, 1]", path)
        if s.gas_diffusion_coeff is not None and not _finite_positive(s.gas_diffusion_coeff):
            err("invalid-value", f"diffusion_coeff of {s.name!r} must be > 0", path)
        if s.absolute_tolerance is not None and not _finite_positive(s.absolute_tolerance):
            err("invalid-value", f"absolute_tolerance of {s.name!r} must be > 0", path)

    phase_names = {p.name for p in config.phases}
    for ph in config.phases:
        path = f"$.phases[{ph.name}]"
        if not ph.species:
            err("empty-phase", f"aerosol phase {ph.name!r} has no species", path)
        if len(set(ph.species)) != len(ph.species):
            err("duplicate-name", f"aerosol phase {ph.name!r} lists a species twice", path)
        for name in ph.species:
            if config.find_species(name, AEROSOL) is None:
                err("unknown-species",
                    f"phase {ph.name!r} references undeclared aerosol species {name!r}",
                    f"{path}.species.{name}")

    rep = config.aero_rep
    if rep is not None:
        path = "$.aero_rep"
        if rep.scheme == "modal_sectional":
            if not rep.modes and not rep.sections:
                err("empty-representation", "modal/sectional scheme has no modes or sections",
                    path)
            slots = [*rep.modes, *rep.sections]
            if len({s.name for s in slots}) != len(slots):
                err("duplicate-name", "mode/section names must be unique", path)
            for m in rep.modes:
                if not _finite_positive(m.gmd):
                    err("invalid-value", f"mode {m.name!r} GMD must be > 0", f"{path}.{m.name}")
                if not (math.isfinite(m.gsd) and m.gsd > 1.0):
                    err("invalid-value", f"mode {m.name!r} GSD must be > 1", f"{path}.{m.name}")
            for s in rep.sections:
                if not _finite_positive(s.mid_diameter):
                    err("invalid-value", f"section {s.name!r} mid_diameter must be > 0",
                        f"{path}.{s.name}")
            for s in slots:
                if not s.phases:
                    err("empty-slot", f"{s.name!r} hosts no aerosol phase", f"{path}.{s.name}")
                for ph in s.phases:
                    if ph not in phase_names:
                        err("unknown-phase", f"{s.name!r} references unknown phase {ph!r}",
                            f"{path}.{s.name}.phases")
        else:
            if rep.max_computational_particles < 1:
                err("empty-representation", "single-particle scheme needs >= 1 particle", path)
            if not rep.phases:
                err("empty-slot", "computational particles host no aerosol phase", path)
            for ph in rep.phases:
                if ph not in phase_names:
                    err("unknown-phase", f"particles reference unknown phase {ph!r}",
                        f"{path}.phases")

    for i, p in enumerate(config.processes):
        _validate_process(config, p, f"$.processes[{p.label or i}]", err, warn)

    for i, par in enumerate(config.parameters):
        path = f"$.parameters[{par.label or i}]"
        ph = config.find_phase(par.phase)
        if ph is None:
            err("unknown-phase", f"ZSR parameter references unknown phase {par.phase!r}", path)
            continue
        if par.target_water_species not in ph.species:
            err("unknown-species",
                f"water species {par.target_water_species!r} is not in phase {par.phase!r}",
                f"{path}.water_species")
        if not par.electrolytes:
            err("missing-parameter", "ZSR parameter needs at least one electrolyte",
                f"{path}.electrolytes")
        for el in par.electrolytes:
            if el.name not in ph.species:
                err("unknown-species",
                    f"electrolyte {el.name!r} is not a species of phase {par.phase!r}",
                    f"{path}.electrolytes.{el.name}")
            if not _finite_positive(el.molecular_weight):
                err("invalid-value", f"electrolyte {el.name!r} molecular_weight must be > 0",
                    f"{path}.electrolytes.{el.name}")
            if el.form not in ELECTROLYTE_FORMS:
                err("invalid-value", f"electrolyte {el.name!r} form must be one of "
                    f"{ELECTROLYTE_FORMS}", f"{path}.electrolytes.{el.name}.form")
            if not el.molality_poly:
                err("invalid-value", f"electrolyte {el.name!r} needs a molality polynomial",
                    f"{path}.electrolytes.{el.name}")

    if config.relative_tolerance is not None and not _finite_positive(config.relative_tolerance):
        err("invalid-value", "relative tolerance must be > 0", "$.relative_tolerance")
    return diags


def _validate_process(config, p: ProcessConfig, path, err, warn) -> None:
    for extra in p.extras:
        if extra.startswith("!missing:"):
            key = extra.split(":", 1)[1]
            err("missing-parameter", f"{p.process_type} requires key {key!r}", f"{path}.{key}")
        else:
            warn("unknown-key", f"key {extra!r} is not used by {p.process_type}",
                 f"{path}.{extra}")

    params = p.params
    for key, value in params.items():
        if not math.isfinite(value):
            err("invalid-value", f"parameter {key!r} is not finite", f"{path}.{key}")

    gas_kind = p.phase == GAS
    if p.process_type in CONDENSED_TYPES or p.process_type in TRANSFER_TYPES:
        phase = config.find_phase(p.phase) if not gas_kind else None
        if phase is None:
            err("unknown-phase", f"{p.process_type} references unknown aerosol phase "
                f"{p.phase!r}", f"{path}.aerosol_phase")
            return
        members = set(phase.species)
    else:
        if not gas_kind:
            err("invalid-value", f"{p.process_type} is a gas-phase process", path)
        members = {s.name for s in config.species_by_kind(GAS)}

    def check_members(names, where, what):
        for name in names:
            if name not in members:
                where_kind = "gas species" if gas_kind else f"species of phase {p.phase!r}"
                err("unknown-species", f"{what} {name!r} is not a declared {where_kind}",
                    f"{path}.{where}.{name}")

    check_members([n for n, _ in p.reactants], "reactants", "reactant")
    check_members([n for n, _ in p.products], "products", "product")
    for key, prods in p.branches:
        check_members([n for n, _ in prods], key, "product")
    for name, qty in p.reactants:
        if qty < 1:
            err("invalid-value", f"reactant {name!r} qty must be >= 1", f"{path}.reactants")
    for name, y in p.products + tuple(x for _, b in p.branches for x in b):
        if y < 0:
            err("invalid-value", f"product {name!r} yield must be >= 0", f"{path}.products")

    t = p.process_type
    if p.mass_yield is not None:
        if p.mass_yield not in {n for n, _ in p.reactants}:
            err("unknown-species", f"mass_yield reference {p.mass_yield!r} is not a reactant",
                f"{path}.mass_yield")
        for name in [p.mass_yield] + [n for n, _ in p.products] + [
                n for _, b in p.branches for n, _ in b]:
            sp = config.find_species(name, GAS)
            if sp is not None and not sp.molecular_weight > 0:
                err("invalid-value", f"mass-based yields need a molecular_weight for {name!r}",
                    f"{path}.mass_yield")
    if t == "PHOTOLYSIS" and len(p.reactants) != 1:
        err("invalid-value", "photolysis takes exactly one reactant", f"{path}.reactants")
    if t in ("EMISSION", "FIRST_ORDER_LOSS"):
        name = p.ref("species")
        if name is not None and name not in members:
            err("unknown-species", f"species {name!r} is not a declared gas species",
                f"{path}.species")
    if t in UPDATABLE_TYPES and params.get("rate", 0.0) < 0:
        err("invalid-value", "rate must be >= 0", f"{path}.rate")
    if t == "TROE":
        if "Fc" in params and not (0.0 < params["Fc"] <= 1.0):
            err("invalid-value", "Fc must be in (0, 1]", f"{path}.Fc")
        if "N" in params and params["N"] <= 0:
            err("invalid-value", "N must be > 0", f"{path}.N")
    if t == "ARRHENIUS" or t == "CONDENSED_PHASE_ARRHENIUS":
        if "Ea" in params and "C" in params:
            err("invalid-value", "give either Ea or C, not both", path)
        if params.get("D", 300.0) <= 0:
            err("invalid-value", "D must be > 0", f"{path}.D")
    if t == "WENNBERG_NO_RO2" and "a0" in params and not (0.0 < params["a0"] <= 1.0):
        err("invalid-value", "a0 must be in (0, 1]", f"{path}.a0")
    if t in CONDENSED_TYPES:
        units = p.units or "mol m-3"
        if units not in ("mol m-3", "M"):
            err("invalid-value", f"units must be 'mol m-3' or 'M', got {units!r}",
                f"{path}.units")
        if units == "M" and p.ref("aerosol_water") is None:
            err("missing-parameter", "aqueous (M) units require 'aerosol_water'",
                f"{path}.aerosol_water")
        if t == "AQUEOUS_REVERSIBLE" and params.get("k_reverse", 0.0) < 0:
            err("invalid-value", "k_reverse must be >= 0", f"{path}.k_reverse")
    if t in TRANSFER_TYPES:
        gas_name = p.ref("gas_species")
        gas = config.find_species(gas_name, GAS) if gas_name else None
        if gas_name is not None and gas is None:
            err("unknown-species", f"gas species {gas_name!r} is not declared",
                f"{path}.gas_species")
        elif gas is not None and gas.gas_diffusion_coeff is None:
            err("missing-parameter", f"gas species {gas_name!r} needs diffusion_coeff",
                f"{path}.gas_species")
        aero = p.ref("aerosol_species")
        if aero is not None and aero not in members:
            err("unknown-species", f"aerosol species {aero!r} is not in phase {p.phase!r}",
                f"{path}.aerosol_species")
        if t == "HENRYS_LAW_PHASE_TRANSFER" and "H298" in params and params["H298"] <= 0:
            err("invalid-value", "H298 must be > 0", f"{path}.H298")
    water = p.ref("aerosol_water")
    if water is not None and water not in members:
        err("unknown-species", f"aerosol water {water!r} is not in phase {p.phase!r}",
            f"{path}.aerosol_water")


def errors_only(diags: Sequence[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "ERROR"]
