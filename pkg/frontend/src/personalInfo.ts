// Personal-info guard, mirrored from the server's rules so bad values are
// rejected before they ever reach local storage.

import type { PersonalInfoSchema, Question } from './types.js';

export const FORBIDDEN_QUESTION_IDS = new Set(['name', 'birth_day', 'birth_month']);
export const AGE_CAP = 90;
export const AGE_CAP_TOKEN = '90+';

export function ageCapOf(question: Question): number | null {
  const cap = question.constraints?.age_cap;
  return typeof cap === 'number' ? cap : null;
}

// Any age at or above the cap collapses into the "90+" bucket.
export function applyAgeCap(value: string | number, cap: number): string | number {
  const token = `${cap}+`;
  if (typeof value === 'string') {
    if (value === token) return token;
    if (!/^\d+$/.test(value)) throw new Error('expected an age');
    value = parseInt(value, 10);
  }
  if (!Number.isInteger(value) || value < 0) throw new Error('expected an age');
  return value >= cap ? token : value;
}

export function validateAnswer(question: Question, value: unknown): unknown {
  const cap = ageCapOf(question);
  if (cap !== null) return applyAgeCap(value as string | number, cap);
  if (question.kind === 'text') {
    if (typeof value !== 'string') throw new Error(`${question.id}: expected free text`);
    return value;
  }
  if (typeof value !== 'string' || !(question.options ?? []).includes(value)) {
    throw new Error(`${question.id}: expected one of the listed options`);
  }
  return value;
}

export function validateAnswers(
  answers: Record<string, unknown>,
  schema: PersonalInfoSchema
): Record<string, unknown> {
  const byId = new Map(schema.questions.map((q) => [q.id, q]));
  const out: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(answers)) {
    if (FORBIDDEN_QUESTION_IDS.has(key)) throw new Error(`forbidden field: ${key}`);
    const question = byId.get(key);
    if (!question) throw new Error(`unknown question: ${key}`);
    out[key] = validateAnswer(question, value);
  }
  return out;
}

// Defensive: drop forbidden questions even if a server ever served them.
export function renderableQuestions(schema: PersonalInfoSchema): Question[] {
  return schema.questions.filter((q) => !FORBIDDEN_QUESTION_IDS.has(q.id));
}
