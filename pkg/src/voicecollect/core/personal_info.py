"""Personal-information questionnaire: schema, answer validation, age cap.

Only non-identifying questions are allowed: never a name, never a day or
month of birth. Age is special-cased — any value of ninety or above is
collapsed into the categorical "90+" bucket before it is stored anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ForbiddenField, MalformedDocument, TypeMismatch, UnknownQuestion

FORBIDDEN_QUESTION_IDS = frozenset({"name", "birth_day", "birth_month"})

AGE_CAP = 90
AGE_CAP_TOKEN = "90+"

QUESTION_KINDS = ("text", "pulldown", "multiple_choice")


@dataclass(frozen=True)
class Question:
    id: str
    kind: str
    label: dict[str, str]
    options: tuple[str, ...] = ()
    # {"age_cap": 90} marks an age/year question subject to the 90+ bucket.
    constraints: dict[str, int] = field(default_factory=dict)

    @property
    def age_cap(self) -> int | None:
        return self.constraints.get("age_cap")


@dataclass(frozen=True)
class PersonalInfoSchema:
    questions: tuple[Question, ...]

    def by_id(self) -> dict[str, Question]:
        return {q.id: q for q in self.questions}


def validate_personal_info(
    answers: dict[str, object], schema: PersonalInfoSchema
) -> dict[str, object]:
    """Check answers against the schema and return the storable map.

    Raises ForbiddenField / UnknownQuestion / TypeMismatch; the returned
    map never holds a numeric age at or above the cap.
    """
    questions = schema.by_id()
    validated: dict[str, object] = {}
    for key, value in answers.items():
        if key in FORBIDDEN_QUESTION_IDS:
            raise ForbiddenField(key)
        question = questions.get(key)
        if question is None:
            raise UnknownQuestion(key)
        validated[key] = _validate_answer(question, value)
    return validated


def _validate_answer(question: Question, value: object) -> object:
    cap = question.age_cap
    if cap is not None:
        return _apply_age_cap(question, value, cap)
    if question.kind == "text":
        if not isinstance(value, str):
            raise TypeMismatch(f"{question.id}: expected free text")
        return value
    # pulldown / multiple_choice: must be one of the declared options
    if not isinstance(value, str) or value not in question.options:
        raise TypeMismatch(f"{question.id}: expected one of the listed options")
    return value


def _apply_age_cap(question: Question, value: object, cap: int) -> object:
    token = f"{cap}+"
    if isinstance(value, str):
        if value == token:
            return token
        if value.isdigit():
            value = int(value)
        else:
            raise TypeMismatch(f"{question.id}: expected an age")
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeMismatch(f"{question.id}: expected an age")
    if value < 0:
        raise TypeMismatch(f"{question.id}: age cannot be negative")
    if value >= cap:
        return token
    return value


# --- wire document ----------------------------------------------------------


def schema_to_doc(schema: PersonalInfoSchema) -> dict:
    doc_questions = []
    for q in schema.questions:
        entry: dict[str, object] = {"id": q.id, "kind": q.kind, "label": dict(q.label)}
        if q.options:
            entry["options"] = list(q.options)
        if q.constraints:
            entry["constraints"] = dict(q.constraints)
        doc_questions.append(entry)
    return {"questions": doc_questions}


def schema_from_doc(doc: object) -> PersonalInfoSchema:
    if not isinstance(doc, dict) or not isinstance(doc.get("questions"), list):
        raise MalformedDocument("schema document must hold a questions array")
    questions = []
    for raw in doc["questions"]:
        if not isinstance(raw, dict):
            raise MalformedDocument("each question must be an object")
        qid = raw.get("id")
        kind = raw.get("kind")
        label = raw.get("label")
        if not isinstance(qid, str) or not qid:
            raise MalformedDocument("question id must be a non-empty string")
        if qid in FORBIDDEN_QUESTION_IDS:
            raise ForbiddenField(qid)
        if kind not in QUESTION_KINDS:
            raise MalformedDocument(f"{qid}: unknown question kind {kind!r}")
        if not isinstance(label, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in label.items()
        ):
            raise MalformedDocument(f"{qid}: label must map language codes to strings")
        options = raw.get("options", [])
        if not isinstance(options, list) or any(not isinstance(o, str) for o in options):
            raise MalformedDocument(f"{qid}: options must be strings")
        if kind != "text" and not options:
            raise MalformedDocument(f"{qid}: {kind} questions need options")
        constraints = raw.get("constraints", {})
        if not isinstance(constraints, dict):
            raise MalformedDocument(f"{qid}: constraints must be an object")
        questions.append(
            Question(
                id=qid,
                kind=kind,
                label=dict(label),
                options=tuple(options),
                constraints=dict(constraints),
            )
        )
    return PersonalInfoSchema(questions=tuple(questions))


def serialize_schema(schema: PersonalInfoSchema) -> bytes:
    return (json.dumps(schema_to_doc(schema), ensure_ascii=False, indent=2) + "\n").encode()


def _q(qid, kind, en, es, ca, options=(), constraints=None):
    return Question(
        id=qid,
        kind=kind,
        label={"en": en, "es": es, "ca": ca},
        options=tuple(options),
        constraints=dict(constraints or {}),
    )


def default_question_schema() -> PersonalInfoSchema:
    """The fixed first-version question set (COVID-19 study)."""
    yes_no = ("yes", "no")
    age_options = tuple(str(n) for n in range(1, AGE_CAP)) + (AGE_CAP_TOKEN,)
    return PersonalInfoSchema(
        questions=(
            _q("country", "text", "Country", "País", "País"),
            _q("zip", "text", "ZIP code", "Código postal", "Codi postal"),
            _q(
                "age",
                "pulldown",
                "Age",
                "Edad",
                "Edat",
                options=age_options,
                constraints={"age_cap": AGE_CAP},
            ),
            _q(
                "diagnosed_covid",
                "multiple_choice",
                "Have you been diagnosed with COVID-19?",
                "¿Le han diagnosticado COVID-19?",
                "Li han diagnosticat COVID-19?",
                options=yes_no,
            ),
            _q(
                "diagnosed_when",
                "text",
                "If so, when?",
                "Si es así, ¿cuándo?",
                "Si és així, quan?",
            ),
            _q(
                "fever",
                "multiple_choice",
                "Do you have fever?",
                "¿Tiene fiebre?",
                "Té febre?",
                options=yes_no,
            ),
            _q(
                "fever_how_much",
                "text",
                "If so, how much?",
                "Si es así, ¿cuánta?",
                "Si és així, quanta?",
            ),
            _q(
                "cough_today",
                "multiple_choice",
                "Did you cough today?",
                "¿Ha tosido hoy?",
                "Ha tossit avui?",
                options=yes_no,
            ),
            _q(
                "cough_how_much",
                "text",
                "If so, how much?",
                "Si es así, ¿cuánto?",
                "Si és així, quant?",
            ),
            _q(
                "other_symptoms",
                "text",
                "Tell us about any other symptoms you think are relevant",
                "Cuéntenos otros síntomas que considere relevantes",
                "Expliqui'ns altres símptomes que consideri rellevants",
            ),
        )
    )
