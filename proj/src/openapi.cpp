#include "chainstage/http_api.hpp"

namespace chainstage {

std::string_view openapi_document() {
    static constexpr std::string_view kDocument = R"json({
 "openapi": "3.0.3",
 "info": {
  "title": "chainstage studio API",
  "version": "0.1.0"
 },
 "paths": {
  "/healthz": {
   "get": {
    "summary": "Liveness probe",
    "responses": {
     "200": {
      "description": "ok",
      "content": {
       "application/json": {
        "schema": {
         "type": "object",
         "properties": {
          "status": {
           "type": "string"
          }
         }
        }
       }
      }
     }
    }
   }
  },
  "/version": {
   "get": {
    "summary": "Service, schema and template versions",
    "responses": {
     "200": {
      "description": "versions",
      "content": {
       "application/json": {
        "schema": {
         "type": "object"
        }
       }
      }
     }
    }
   }
  },
  "/openapi": {
   "get": {
    "summary": "This document",
    "responses": {
     "200": {
      "description": "OpenAPI 3 document",
      "content": {
       "application/json": {
        "schema": {
         "type": "object"
        }
       }
      }
     }
    }
   }
  },
  "/designs": {
   "get": {
    "summary": "List live designs",
    "responses": {
     "200": {
      "description": "designs",
      "content": {
       "application/json": {
        "schema": {
         "type": "object",
         "properties": {
          "designs": {
           "type": "array",
           "items": {
            "type": "object",
            "properties": {
             "design_id": {
              "type": "string"
             },
             "title": {
              "type": "string"
             },
             "version": {
              "type": "integer"
             }
            }
           }
          }
         }
        }
       }
      }
     }
    }
   }
  },
  "/designs/{id}": {
   "parameters": [
    {
     "name": "id",
     "in": "path",
     "required": true,
     "schema": {
      "type": "string"
     }
    }
   ],
   "put": {
    "summary": "Create or replace a design",
    "parameters": [
     {
      "name": "If-Match",
      "in": "header",
      "required": false,
      "schema": {
       "type": "string"
      },
      "description": "Current version etag, e.g. \"3\". Required when the design exists."
     }
    ],
    "requestBody": {
     "required": true,
     "content": {
      "application/json": {
       "schema": {
        "$ref": "#/components/schemas/Design"
       }
      }
     }
    },
    "responses": {
     "200": {
      "description": "updated, or unchanged when identical",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/PutResult"
        }
       }
      }
     },
     "201": {
      "description": "created",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/PutResult"
        }
       }
      }
     },
     "400": {
      "description": "PARSE_ERROR, SCHEMA_ERROR or INVALID_ARGUMENT",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "409": {
      "description": "VERSION_CONFLICT",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "422": {
      "description": "INVALID_DESIGN with the validation report",
      "content": {
       "application/json": {
        "schema": {
         "allOf": [
          {
           "$ref": "#/components/schemas/Error"
          },
          {
           "type": "object",
           "properties": {
            "report": {
             "$ref": "#/components/schemas/ValidationReport"
            }
           }
          }
         ]
        }
       }
      }
     },
     "428": {
      "description": "PRECONDITION_REQUIRED",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   },
   "get": {
    "summary": "Canonical design document",
    "responses": {
     "200": {
      "description": "design; ETag carries the version",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Design"
        }
       }
      }
     },
     "404": {
      "description": "DESIGN_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   },
   "delete": {
    "summary": "Delete a design (running sessions keep their pinned version)",
    "parameters": [
     {
      "name": "If-Match",
      "in": "header",
      "required": false,
      "schema": {
       "type": "string"
      },
      "description": "Current version etag, e.g. \"3\". Required when the design exists."
     }
    ],
    "responses": {
     "204": {
      "description": "deleted"
     },
     "404": {
      "description": "DESIGN_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "409": {
      "description": "VERSION_CONFLICT",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "428": {
      "description": "PRECONDITION_REQUIRED",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  },
  "/designs/{id}/validate": {
   "parameters": [
    {
     "name": "id",
     "in": "path",
     "required": true,
     "schema": {
      "type": "string"
     }
    }
   ],
   "post": {
    "summary": "Validate a document, or the stored design when the body is empty; never persists",
    "requestBody": {
     "required": false,
     "content": {
      "application/json": {
       "schema": {
        "$ref": "#/components/schemas/Design"
       }
      }
     }
    },
    "responses": {
     "200": {
      "description": "report",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/ValidationReport"
        }
       }
      }
     },
     "400": {
      "description": "PARSE_ERROR or SCHEMA_ERROR",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "404": {
      "description": "DESIGN_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  },
  "/designs/{id}/suggest-comment": {
   "parameters": [
    {
     "name": "id",
     "in": "path",
     "required": true,
     "schema": {
      "type": "string"
     }
    }
   ],
   "post": {
    "summary": "Persona comment suggestion for the design's scenario",
    "parameters": [
     {
      "name": "persona",
      "in": "query",
      "required": true,
      "schema": {
       "type": "string",
       "enum": [
        "aggressive",
        "upstander",
        "passive"
       ]
      }
     },
     {
      "name": "student_name",
      "in": "query",
      "required": false,
      "schema": {
       "type": "string",
       "default": "John"
      }
     }
    ],
    "responses": {
     "200": {
      "description": "suggestion",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Suggestion"
        }
       }
      }
     },
     "404": {
      "description": "DESIGN_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "502": {
      "description": "PROVIDER_UNAVAILABLE or AUTH_ERROR",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  },
  "/sessions": {
   "post": {
    "summary": "Start a session with the student's opening comment",
    "requestBody": {
     "required": true,
     "content": {
      "application/json": {
       "schema": {
        "type": "object",
        "required": [
         "design_id",
         "comment"
        ],
        "properties": {
         "design_id": {
          "type": "string"
         },
         "comment": {
          "type": "string"
         },
         "session_id": {
          "type": "string",
          "description": "optional; generated when absent"
         }
        }
       }
      }
     }
    },
    "responses": {
     "201": {
      "description": "session and first outcome",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Step"
        }
       }
      }
     },
     "400": {
      "description": "EMPTY_COMMENT",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "404": {
      "description": "DESIGN_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "502": {
      "description": "provider failure; nothing was stored",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  },
  "/sessions/{id}": {
   "parameters": [
    {
     "name": "id",
     "in": "path",
     "required": true,
     "schema": {
      "type": "string"
     }
    }
   ],
   "get": {
    "summary": "Session state with transcript",
    "responses": {
     "200": {
      "description": "session",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Session"
        }
       }
      }
     },
     "404": {
      "description": "SESSION_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  },
  "/sessions/{id}/messages": {
   "parameters": [
    {
     "name": "id",
     "in": "path",
     "required": true,
     "schema": {
      "type": "string"
     }
    }
   ],
   "post": {
    "summary": "Send a student message",
    "requestBody": {
     "required": true,
     "content": {
      "application/json": {
       "schema": {
        "type": "object",
        "required": [
         "text"
        ],
        "properties": {
         "text": {
          "type": "string"
         }
        }
       }
      }
     }
    },
    "responses": {
     "200": {
      "description": "outcome",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Step"
        }
       }
      }
     },
     "400": {
      "description": "EMPTY_MESSAGE",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "404": {
      "description": "SESSION_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "409": {
      "description": "TURN_LIMIT",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     },
     "502": {
      "description": "provider failure; session unchanged",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  },
  "/sessions/{id}/reset": {
   "parameters": [
    {
     "name": "id",
     "in": "path",
     "required": true,
     "schema": {
      "type": "string"
     }
    }
   ],
   "post": {
    "summary": "Clear the transcript and await a new comment",
    "responses": {
     "200": {
      "description": "session",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Session"
        }
       }
      }
     },
     "404": {
      "description": "SESSION_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  },
  "/sessions/{id}/transcript": {
   "parameters": [
    {
     "name": "id",
     "in": "path",
     "required": true,
     "schema": {
      "type": "string"
     }
    }
   ],
   "get": {
    "summary": "Transcript export",
    "parameters": [
     {
      "name": "format",
      "in": "query",
      "schema": {
       "type": "string",
       "enum": [
        "jsonl",
        "markdown"
       ],
       "default": "jsonl"
      }
     }
    ],
    "responses": {
     "200": {
      "description": "one JSON turn per line, or markdown",
      "content": {
       "application/x-ndjson": {
        "schema": {
         "type": "string"
        }
       },
       "text/markdown": {
        "schema": {
         "type": "string"
        }
       }
      }
     },
     "404": {
      "description": "SESSION_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  },
  "/sessions/{id}/suggestions": {
   "parameters": [
    {
     "name": "id",
     "in": "path",
     "required": true,
     "schema": {
      "type": "string"
     }
    }
   ],
   "get": {
    "summary": "Persona suggestion for the next student message",
    "parameters": [
     {
      "name": "persona",
      "in": "query",
      "required": true,
      "schema": {
       "type": "string",
       "enum": [
        "aggressive",
        "upstander",
        "passive"
       ]
      }
     },
     {
      "name": "student_name",
      "in": "query",
      "required": false,
      "schema": {
       "type": "string",
       "default": "John"
      }
     }
    ],
    "responses": {
     "200": {
      "description": "suggestion",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Suggestion"
        }
       }
      }
     },
     "404": {
      "description": "SESSION_NOT_FOUND",
      "content": {
       "application/json": {
        "schema": {
         "$ref": "#/components/schemas/Error"
        }
       }
      }
     }
    }
   }
  }
 },
 "components": {
  "schemas": {
   "Error": {
    "type": "object",
    "required": [
     "error"
    ],
    "properties": {
     "error": {
      "type": "object",
      "required": [
       "code",
       "message"
      ],
      "properties": {
       "code": {
        "type": "string"
       },
       "message": {
        "type": "string"
       },
       "field": {
        "type": "string"
       },
       "line": {
        "type": "integer"
       },
       "column": {
        "type": "integer"
       },
       "retry_after": {
        "type": "number"
       }
      }
     }
    }
   },
   "Design": {
    "type": "object",
    "description": "Design document; see docs/design-format.md",
    "required": [
     "schema",
     "design_id",
     "title",
     "scenario",
     "root_behaviors",
     "nodes",
     "created_at",
     "updated_at"
    ],
    "properties": {
     "schema": {
      "type": "string",
      "enum": [
       "chainstage/1"
      ]
     }
    }
   },
   "PutResult": {
    "type": "object",
    "properties": {
     "design_id": {
      "type": "string"
     },
     "version": {
      "type": "integer"
     },
     "changed": {
      "type": "boolean"
     }
    }
   },
   "ValidationReport": {
    "type": "object",
    "properties": {
     "ok": {
      "type": "boolean"
     },
     "violations": {
      "type": "array",
      "items": {
       "type": "object",
       "properties": {
        "code": {
         "type": "string"
        },
        "path": {
         "type": "string"
        },
        "message": {
         "type": "string"
        }
       }
      }
     }
    }
   },
   "Position": {
    "type": "object",
    "properties": {
     "kind": {
      "type": "string",
      "enum": [
       "AWAITING_COMMENT",
       "AT_ROOT",
       "AT_REACTION",
       "LEAF_CONTINUATION"
      ]
     },
     "node_id": {
      "type": "string"
     }
    }
   },
   "Turn": {
    "type": "object",
    "properties": {
     "speaker": {
      "type": "string",
      "enum": [
       "STUDENT",
       "CHATBOT"
      ]
     },
     "text": {
      "type": "string"
     },
     "origin": {
      "type": "string"
     },
     "ts": {
      "type": "string"
     }
    }
   },
   "Session": {
    "type": "object",
    "properties": {
     "session_id": {
      "type": "string"
     },
     "design_id": {
      "type": "string"
     },
     "design_version": {
      "type": "integer"
     },
     "position": {
      "$ref": "#/components/schemas/Position"
     },
     "fallback_count": {
      "type": "integer"
     },
     "turns": {
      "type": "integer"
     },
     "created_at": {
      "type": "string"
     },
     "transcript": {
      "type": "array",
      "items": {
       "$ref": "#/components/schemas/Turn"
      }
     }
    }
   },
   "Outcome": {
    "type": "object",
    "properties": {
     "reply": {
      "type": "string"
     },
     "route": {
      "type": "string",
      "nullable": true
     },
     "mode": {
      "type": "string",
      "enum": [
       "ROUTED",
       "FALLBACK",
       "CONTINUATION"
      ]
     },
     "position": {
      "$ref": "#/components/schemas/Position"
     },
     "prompts": {
      "type": "array",
      "items": {
       "type": "object",
       "properties": {
        "kind": {
         "type": "string"
        },
        "template_version": {
         "type": "string"
        },
        "rendered": {
         "type": "string"
        }
       }
      }
     }
    }
   },
   "Step": {
    "type": "object",
    "properties": {
     "session": {
      "$ref": "#/components/schemas/Session"
     },
     "outcome": {
      "$ref": "#/components/schemas/Outcome"
     }
    }
   },
   "Suggestion": {
    "type": "object",
    "properties": {
     "persona": {
      "type": "string"
     },
     "phase": {
      "type": "string",
      "enum": [
       "COMMENT",
       "REPLY"
      ]
     },
     "text": {
      "type": "string"
     },
     "word_count": {
      "type": "integer"
     }
    }
   }
  }
 }
}
)json";
    return kDocument;
}

}  // namespace chainstage
